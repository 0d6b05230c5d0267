"""
URL configuration for the singletsim project.

/api/rpc/   JSON-RPC tool endpoint (GET: tool discovery, POST: tool call)
"""

from django.urls import include, path

urlpatterns = [
    path('api/rpc/', include('simulator.rpc')),
]
