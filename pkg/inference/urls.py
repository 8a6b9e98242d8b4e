"""
URL configuration for the inference app.
"""

from django.urls import path
from .views import InferView, HealthCheckView

app_name = 'inference'

urlpatterns = [
    path('infer/', InferView.as_view(), name='infer'),
    path('health/', HealthCheckView.as_view(), name='health'),
]
