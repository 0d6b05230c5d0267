import functools
import inspect

import structlog

from . import experiments, pulselang
from .acquisition import ReadoutError
from .config import build_config
from .serializers import ExperimentRecordSerializer, TruthTableCellSerializer

log = structlog.get_logger(__name__)

_tool_funcs = {}
_registered_tools = []

_JSON_TYPES = {int: "integer", float: "number", bool: "boolean", str: "string", list: "array"}


class ToolInputError(ValueError):
    """Raised when tool arguments are well-formed but out of range."""
    pass


def tool(name: str, description: str):
    """
    Register a function as an RPC tool.
    The parameter JSON schema is taken from the function signature.
    """

    def decorator(func):
        signature = inspect.signature(func)
        properties = {}
        required = []
        for param_name, param in signature.parameters.items():
            schema = {"type": _JSON_TYPES.get(param.annotation, "string")}
            if param.default is inspect.Parameter.empty:
                required.append(param_name)
            else:
                schema["default"] = param.default
            properties[param_name] = schema

        _registered_tools.append({
            "name": name,
            "description": description,
            "inputSchema": {"type": "object", "properties": properties, "required": required},
        })

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            log.info("tool_call", tool=name, kwargs=kwargs)
            try:
                result = func(*args, **kwargs)
            except ReadoutError as e:
                log.warning("tool_readout_failed", tool=name, error=str(e))
                raise
            except Exception as e:
                log.error("tool_failed", tool=name, error=str(e), exc_info=True)
                raise
            log.info("tool_success", tool=name, result_preview=str(result)[:100])
            return result

        _tool_funcs[name] = wrapper
        return wrapper

    return decorator


def get_registered_tools_metadata():
    """Metadata for every registered tool."""
    return _registered_tools


def get_tool_function(name):
    return _tool_funcs.get(name)


def _label(f: str) -> experiments.FunctionLabel:
    try:
        return experiments.FunctionLabel(f)
    except ValueError:
        raise ToolInputError(f"f must be one of f00, f01, f10, f11, got {f!r}") from None


@tool(
    name="runDeutsch",
    description="Runs the one-query Deutsch algorithm for f and reports the result bit and spectrum readings."
)
def run_deutsch(f: str, epsilon: float = 0.92, noise: bool = True) -> dict:
    config = build_config(epsilon=epsilon, no_noise=not noise)
    record = experiments.run_deutsch(_label(f), config.system, config.noise, config.acquisition)
    return ExperimentRecordSerializer(record).data


@tool(
    name="runClassical",
    description="Evaluates f(x) classically for x in {0, 1}; the answer is read from spin S."
)
def run_classical(f: str, x: int, epsilon: float = 0.92, noise: bool = True) -> dict:
    if x not in (0, 1):
        raise ToolInputError(f"x must be 0 or 1, got {x!r}")
    config = build_config(epsilon=epsilon, no_noise=not noise)
    record = experiments.run_classical(_label(f), x, config.system, config.noise, config.acquisition)
    return ExperimentRecordSerializer(record).data


@tool(
    name="truthTable",
    description="Runs all twelve classical and quantum cells and compares them with the expected bits."
)
def truth_table(epsilon: float = 0.92, noise: bool = True) -> dict:
    config = build_config(epsilon=epsilon, no_noise=not noise)
    table = experiments.truth_table(config.system, config.noise, config.acquisition)
    return {
        "all_passed": table.all_passed,
        "passed": table.passed_count,
        "cells": TruthTableCellSerializer(table.cells, many=True).data,
    }


@tool(
    name="paraFraction",
    description="Equilibrium para-hydrogen fraction at a temperature in kelvin."
)
def para_fraction(temperature: float) -> dict:
    try:
        fraction = experiments.para_fraction(temperature)
    except ValueError as e:
        raise ToolInputError(str(e)) from e
    return {"temperature": temperature, "para_fraction": fraction}


@tool(
    name="parseSequence",
    description="Parses pulse-sequence text and returns its canonical form and event count."
)
def parse_sequence(text: str) -> dict:
    try:
        seq = pulselang.parse(text)
    except pulselang.SequenceSyntaxError as e:
        raise ToolInputError(str(e)) from e
    return {"canonical": pulselang.format(seq), "events": len(seq), "has_gradient": seq.contains_gradient}


@tool(
    name="builtinSequence",
    description="Returns a named builtin sequence (A, B, C, P01, P10, P11, U01_po, hadamard, ...)."
)
def builtin_sequence(name: str) -> dict:
    try:
        seq = pulselang.builtin(name)
    except pulselang.UnknownSequenceError as e:
        raise ToolInputError(str(e)) from e
    return {"name": name, "text": pulselang.format(seq), "events": len(seq)}
