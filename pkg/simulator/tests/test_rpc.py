from unittest import mock

from django.test import SimpleTestCase
from django.urls import reverse
from rest_framework.test import APIClient

from simulator.functions import get_registered_tools_metadata, get_tool_function


class ToolRegistryTests(SimpleTestCase):
    def test_tools_are_registered_with_schemas(self):
        tools = {t["name"]: t for t in get_registered_tools_metadata()}
        self.assertEqual(set(tools), {"runDeutsch", "runClassical", "truthTable", "paraFraction",
                                      "parseSequence", "builtinSequence"})
        schema = tools["runClassical"]["inputSchema"]
        self.assertEqual(schema["required"], ["f", "x"])
        self.assertEqual(schema["properties"]["epsilon"], {"type": "number", "default": 0.92})
        self.assertEqual(schema["properties"]["x"]["type"], "integer")

    def test_lookup(self):
        self.assertIsNotNone(get_tool_function("paraFraction"))
        self.assertIsNone(get_tool_function("nope"))


class RpcEndpointTests(SimpleTestCase):
    def setUp(self):
        self.client = APIClient()
        self.url = reverse("simulator_rpc")

    def call(self, method, params=None, rpc_id=1):
        payload = {"jsonrpc": "2.0", "id": rpc_id, "method": method}
        if params is not None:
            payload["params"] = params
        return self.client.post(self.url, payload, format="json")

    def test_discovery(self):
        response = self.client.get(self.url)
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.json()["serverInfo"]["name"], "singletsim")
        self.assertEqual(len(response.json()["tools"]), 6)

    def test_deutsch_call(self):
        response = self.call("runDeutsch", {"f": "f01"})
        self.assertEqual(response.status_code, 200)
        result = response.json()["result"]
        self.assertEqual(result["result_bit"], 1)
        self.assertEqual(result["verdict"], "BALANCED")
        self.assertEqual(response.json()["id"], 1)

    def test_para_fraction_call(self):
        result = self.call("paraFraction", {"temperature": 20}).json()["result"]
        self.assertAlmostEqual(result["para_fraction"], 0.9986, delta=1e-3)

    def test_parse_sequence_call(self):
        result = self.call("parseSequence", {"text": "-90x  [tau1] G"}).json()["result"]
        self.assertEqual(result, {"canonical": "90-x [tau1] G", "events": 3, "has_gradient": True})

    def test_missing_method(self):
        response = self.client.post(self.url, {"id": 3}, format="json")
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["error"]["code"], -32600)

    def test_unknown_method(self):
        response = self.call("teleport")
        self.assertEqual(response.status_code, 404)
        self.assertEqual(response.json()["error"]["code"], -32601)

    def test_invalid_params(self):
        for method, params in (("runClassical", {"f": "f01", "x": 2}), ("paraFraction", {"kelvin": 20}),
                               ("parseSequence", {"text": "90q"}), ("builtinSequence", {"name": "Z"}),
                               ("runDeutsch", {"f": "f99"})):
            with self.subTest(method=method):
                response = self.call(method, params)
                self.assertEqual(response.status_code, 400)
                self.assertEqual(response.json()["error"]["code"], -32602)

    def test_ambiguous_readout(self):
        response = self.call("runDeutsch", {"f": "f00", "epsilon": 0.0})
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()["error"]["code"], -32000)

    def test_type_error_inside_a_tool_is_internal(self):
        def broken(text: str):
            raise TypeError("unsupported operand type(s)")

        with mock.patch("simulator.rpc.get_tool_function", return_value=broken):
            response = self.call("parseSequence", {"text": "90x"})
        self.assertEqual(response.status_code, 500)
        self.assertEqual(response.json()["error"]["code"], -32603)
