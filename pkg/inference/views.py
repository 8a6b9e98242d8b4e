from rest_framework.views import APIView
from rest_framework.response import Response
from datetime import datetime
import time
import logging

import numpy as np
from django.conf import settings

from sensing.exceptions import PipelineError

from .bundle import get_bundle
from .exceptions import DimensionMismatch
from .serializers import InferenceRequestSerializer

logger = logging.getLogger(__name__)


class BaseAPIView(APIView):

    def dispatch(self, request, *args, **kwargs):
        """Add request start time for performance monitoring."""
        request.start_time = time.time()
        return super().dispatch(request, *args, **kwargs)

    def finalize_response(self, request, response, *args, **kwargs):
        """Add processing time and timestamp to response."""
        response = super().finalize_response(request, response, *args, **kwargs)

        if hasattr(request, 'start_time'):
            processing_time = (time.time() - request.start_time) * 1000

            if hasattr(response, 'data') and isinstance(response.data, dict):
                response.data['timestamp'] = datetime.now().isoformat()
                response.data['processing_time_ms'] = round(processing_time, 2)

        return response


class InferView(BaseAPIView):
    """
    Infer BR or VE for one window from its IMU and ECG feature vectors.

    POST /api/v1/infer/

    Request Body:
    {
        "target": "ve",
        "model_kind": "gpr",
        "imu_features": [... 90 values ...],
        "ecg_features": [... 20 values ...]
    }

    Response:
    {
        "success": true,
        "data": {
            "target": "ve",
            "model_kind": "gpr",
            "posterior": {"rest": 0.01, "walk": 0.02, "run": 0.95, "bike": 0.01, "wave": 0.01},
            "bank_predictions": {"rest": 9.1, "walk": 21.4, "run": 58.2, "bike": 33.0, "wave": 15.2},
            "selected_context": "run",
            "prediction": 58.2
        },
        "error": null,
        "timestamp": "2026-01-01T10:30:00",
        "processing_time_ms": 12.5
    }
    """

    def post(self, request):
        serializer = InferenceRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        bundle = get_bundle()
        group = bundle.group(data['target'], data['model_kind'])
        classifier = bundle.classifier

        imu = np.asarray(data['imu_features'], dtype=float)
        expected = (bundle.layout or {}).get('imu_width')
        if expected and imu.size != expected:
            raise DimensionMismatch(f"Bundle expects {expected} IMU features, got {imu.size}")

        posterior = classifier.predict_posterior(imu)[0]
        ecg = np.asarray(data['ecg_features'], dtype=float)
        banks = group.bank_predictions(ecg)[0]
        prediction = float(group.predict(posterior, ecg)[0])
        best = int(np.argmax(posterior))
        selected = classifier.classes[best] if posterior[best] >= group.tau else None

        logger.info(
            f"Inferred {data['target']} with {data['model_kind']}: {prediction:.3f} "
            f"({'selected ' + selected if selected else 'posterior-weighted'})"
        )
        return Response({
            'success': True,
            'data': {
                'target': data['target'],
                'model_kind': data['model_kind'],
                'posterior': dict(zip(classifier.classes, posterior.tolist())),
                'bank_predictions': dict(zip(group.contexts, banks.tolist())),
                'selected_context': selected,
                'prediction': prediction,
            },
            'error': None,
        })


class HealthCheckView(BaseAPIView):
    """
    Health check endpoint reporting model bundle availability.

    GET /api/v1/health/
    """

    def get(self, request):
        health_status = {
            'status': 'healthy',
            'version': settings.CARDIORESP.get('VERSION', '1.0.0'),
            'bundle': 'unknown',
            'models': [],
        }
        try:
            bundle = get_bundle()
            health_status['bundle'] = 'loaded'
            health_status['contexts'] = list(bundle.classifier.classes)
            health_status['models'] = [f'{t}/{k}' for t, k in sorted(bundle.groups)]
        except PipelineError as e:
            health_status['bundle'] = f'error: {e.message}'
            health_status['status'] = 'degraded'

        return Response({
            'success': True,
            'data': health_status,
            'error': None,
        })
