from rest_framework import serializers
import math

from sensing.ecg_features import ECG_FEATURE_NAMES
from sensing.imu_features import IMU_FEATURE_NAMES, RAW_FEATURE_NAMES

from .conf import MODEL_KINDS, TARGETS


class InferenceRequestSerializer(serializers.Serializer):
    """
    Serializer for a single-window inference request.
    """
    target = serializers.ChoiceField(
        choices=TARGETS,
        help_text="Response to infer: 'br' (breaths/min) or 've' (L/min)",
    )

    model_kind = serializers.ChoiceField(
        choices=MODEL_KINDS,
        default='gpr',
        required=False,
        help_text="Regression family whose banks produce the estimate",
    )

    imu_features = serializers.ListField(
        child=serializers.FloatField(),
        help_text=f"IMU feature vector ({len(IMU_FEATURE_NAMES)} values)",
    )

    ecg_features = serializers.ListField(
        child=serializers.FloatField(),
        min_length=len(ECG_FEATURE_NAMES),
        max_length=len(ECG_FEATURE_NAMES),
        help_text=f"ECG feature vector ({len(ECG_FEATURE_NAMES)} values)",
        error_messages={
            'min_length': f'ECG feature vector must have {len(ECG_FEATURE_NAMES)} values',
            'max_length': f'ECG feature vector must have {len(ECG_FEATURE_NAMES)} values',
        },
    )

    def validate_imu_features(self, value):
        if len(value) not in (len(IMU_FEATURE_NAMES), len(RAW_FEATURE_NAMES)):
            raise serializers.ValidationError(
                f"IMU feature vector must have {len(IMU_FEATURE_NAMES)} values, got {len(value)}"
            )
        return self._finite(value)

    def validate_ecg_features(self, value):
        return self._finite(value)

    @staticmethod
    def _finite(value):
        if not all(math.isfinite(v) for v in value):
            raise serializers.ValidationError("Feature values must be finite")
        return value
