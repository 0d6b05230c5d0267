import time

import structlog
from django.utils.deprecation import MiddlewareMixin

log = structlog.get_logger(__name__)


class LoggingMiddleware(MiddlewareMixin):
    """One structured log line per request to the RPC surface."""

    def process_request(self, request):
        request._started = time.perf_counter()

    def process_response(self, request, response):
        started = getattr(request, '_started', None)
        duration_ms = round((time.perf_counter() - started) * 1000, 1) if started else None
        log.info('http_request', method=request.method, path=request.get_full_path(),
                 status=response.status_code, duration_ms=duration_ms)
        return response
