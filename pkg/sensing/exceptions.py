"""
Error hierarchy shared by every stage of the pipeline.

Each error carries a human message and a stable machine code; the CLI and the
inference API render both in the same error envelope.
"""


class PipelineError(Exception):
    """Base class for all pipeline errors."""

    default_code = 'pipeline_error'

    def __init__(self, message, code=None):
        self.message = message
        self.code = code or self.default_code
        super().__init__(self.message)

    def to_dict(self):
        return {
            'code': self.code,
            'message': self.message,
            'type': self.__class__.__name__,
        }


# Session loading

class MissingFile(PipelineError):
    default_code = 'missing_file'


class SchemaMismatch(PipelineError):
    default_code = 'schema_mismatch'


class EmptyStream(PipelineError):
    default_code = 'empty_stream'


class NonMonotonicTimestamps(PipelineError):
    default_code = 'non_monotonic_timestamps'


class EmptySeries(PipelineError):
    default_code = 'empty_series'


# Signal processing

class StreamTooShort(PipelineError):
    default_code = 'stream_too_short'


class BadKernel(PipelineError):
    default_code = 'bad_kernel'


class BadBand(PipelineError):
    default_code = 'bad_band'


class NoBeatsFound(PipelineError):
    default_code = 'no_beats_found'


class SegmentOutOfBounds(PipelineError):
    default_code = 'segment_out_of_bounds'


class WrongChannelCount(PipelineError):
    default_code = 'wrong_channel_count'


# Configuration

class BadConfig(PipelineError):
    default_code = 'bad_config'
