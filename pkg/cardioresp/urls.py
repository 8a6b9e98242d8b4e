from django.conf import settings
from django.contrib import admin
from django.urls import path, include
from django.http import JsonResponse
from datetime import datetime

def api_root(request):
    """
    API root endpoint with basic information.
    """
    return JsonResponse({
        'success': True,
        'data': {
            'title': 'Contextual Respiration Inference API',
            'version': settings.CARDIORESP['VERSION'],
            'description': 'Breathing rate and minute ventilation from wearable ECG and IMU features',
            'endpoints': {
                'infer': '/api/v1/infer/',
                'health': '/api/v1/health/',
            },
        },
        'error': None,
        'timestamp': datetime.now().isoformat()
    })

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/', api_root, name='api_root'),
    path('api/v1/', include('inference.urls')),
    path('', api_root, name='root'),
]
