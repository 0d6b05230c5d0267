import inspect

import structlog
from django.urls import path
from rest_framework import status
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from .acquisition import ReadoutError
from .functions import get_registered_tools_metadata, get_tool_function

log = structlog.get_logger(__name__)

SERVER_INFO = {
    "name": "singletsim",
    "version": "1.0.0",
    "description": "Two-spin singlet NMR quantum computer simulator",
}

INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
READOUT_FAILED = -32000


def _error(rpc_id, code, message, http_status):
    return Response({"jsonrpc": "2.0", "id": rpc_id, "error": {"code": code, "message": message}},
                    status=http_status)


@api_view(['GET', 'POST'])
@permission_classes([AllowAny])
def rpc_endpoint(request):
    if request.method == 'GET':
        return Response({
            "protocolVersion": "1.0",
            "capabilities": {},
            "serverInfo": SERVER_INFO,
            "tools": get_registered_tools_metadata(),
        })

    rpc_id = request.data.get("id")
    method_name = request.data.get("method")
    params = request.data.get("params") or {}

    if not method_name:
        return _error(rpc_id, INVALID_REQUEST, "Method not provided", status.HTTP_400_BAD_REQUEST)

    func = get_tool_function(method_name)
    if not func:
        return _error(rpc_id, METHOD_NOT_FOUND, f"Method '{method_name}' not found", status.HTTP_404_NOT_FOUND)

    if not isinstance(params, dict):
        return _error(rpc_id, INVALID_PARAMS, "params must be an object", status.HTTP_400_BAD_REQUEST)

    try:
        inspect.signature(func).bind(**params)
    except TypeError as e:
        log.warning("rpc_invalid_params", method=method_name, error=str(e))
        return _error(rpc_id, INVALID_PARAMS, f"Invalid params: {e}", status.HTTP_400_BAD_REQUEST)

    try:
        result = func(**params)
    except ValueError as e:
        log.warning("rpc_invalid_params", method=method_name, error=str(e))
        return _error(rpc_id, INVALID_PARAMS, str(e), status.HTTP_400_BAD_REQUEST)
    except ReadoutError as e:
        return _error(rpc_id, READOUT_FAILED, f"Ambiguous readout: {e}", status.HTTP_422_UNPROCESSABLE_ENTITY)
    except Exception as e:
        log.error("tool_execution_error", method=method_name, error=str(e), exc_info=True)
        return _error(rpc_id, INTERNAL_ERROR, f"Tool execution error: {e}",
                      status.HTTP_500_INTERNAL_SERVER_ERROR)
    return Response({"jsonrpc": "2.0", "id": rpc_id, "result": result})


urlpatterns = [
    path('', rpc_endpoint, name='simulator_rpc'),
]
