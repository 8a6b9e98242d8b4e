from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import exception_handler
import logging

from sensing.exceptions import PipelineError

logger = logging.getLogger(__name__)


def custom_exception_handler(exc, context):
    """
    Exception handler that renders DRF and pipeline errors in one envelope.
    """
    view = context.get('view')
    request = context.get('request')

    if isinstance(exc, PipelineError):
        logger.error(
            f"Pipeline error in {view.__class__.__name__}: {exc.message} "
            f"- Path: {request.path if request else 'N/A'}"
        )
        return Response(
            error_envelope(exc.to_dict()),
            status=getattr(exc, 'http_status', status.HTTP_422_UNPROCESSABLE_ENTITY),
        )

    response = exception_handler(exc, context)

    if response is not None:
        logger.error(
            f"API Error in {view.__class__.__name__}: {exc} "
            f"- Path: {request.path if request else 'N/A'} "
            f"- Method: {request.method if request else 'N/A'}"
        )
        response.data = error_envelope({
            'code': response.status_code,
            'message': get_error_message(exc),
            'type': exc.__class__.__name__,
        })

    return response


def error_envelope(error):
    """Wrap an error body of code, message and type in the response envelope."""
    return {
        'success': False,
        'data': None,
        'error': error,
    }


def get_error_message(exc):
    """
    Extract appropriate error message from exception.
    """
    if hasattr(exc, 'detail'):
        if isinstance(exc.detail, dict):
            messages = []
            for field, errors in exc.detail.items():
                if isinstance(errors, list):
                    for error in errors:
                        messages.append(f"{field}: {error}")
                else:
                    messages.append(f"{field}: {errors}")
            return '; '.join(messages)
        elif isinstance(exc.detail, list):
            return '; '.join(str(error) for error in exc.detail)
        else:
            return str(exc.detail)

    return str(exc)


# Context classifier

class DegenerateData(PipelineError):
    default_code = 'degenerate_data'


class InsufficientData(PipelineError):
    default_code = 'insufficient_data'


class UntrainedModel(PipelineError):
    default_code = 'untrained_model'


# Regression bank

class TooFewSamples(PipelineError):
    default_code = 'too_few_samples'


class DegenerateResponse(PipelineError):
    default_code = 'degenerate_response'


class IllConditionedKernel(PipelineError):
    default_code = 'ill_conditioned_kernel'


class DimensionMismatch(PipelineError):
    default_code = 'dimension_mismatch'


# Pipeline

class BankUnderflow(PipelineError):
    default_code = 'bank_underflow'

    def __init__(self, message, context=None, code=None):
        self.context = context
        super().__init__(message, code)


class EmptyTestSet(PipelineError):
    default_code = 'empty_test_set'


# Biomarker ranking

class UnsupportedFamily(PipelineError):
    default_code = 'unsupported_family'


class LayoutMismatch(PipelineError):
    default_code = 'layout_mismatch'


class NoRankableModels(PipelineError):
    default_code = 'no_rankable_models'


# Model bundles

class BundleUnavailable(PipelineError):
    default_code = 'bundle_unavailable'
    http_status = status.HTTP_503_SERVICE_UNAVAILABLE


class BundleFormatError(PipelineError):
    default_code = 'bundle_format_error'
