"""
OpenTelemetry tracing for backmapping runs.

Spans wrap CLI commands, per-frame work and training epochs. Without an
initialized SDK, spans are recorded in memory (TRACES, capped at MAX_TRACES) with their parent,
status, duration and events, and can be summarised per operation.
"""
import contextvars
import itertools
import json
import logging
import os
import sys
import time
from collections import defaultdict
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

try:
    from opentelemetry import trace as otel_trace
    from opentelemetry.sdk.resources import Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter
    from opentelemetry.trace import Status, StatusCode

    OTEL_AVAILABLE = True
except ImportError:
    OTEL_AVAILABLE = False
    otel_trace = None

try:
    from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

    OTLP_AVAILABLE = True
except ImportError:
    OTLP_AVAILABLE = False
    OTLPSpanExporter = None

logger = logging.getLogger(__name__)

SERVICE_NAME = "ca-backmap"

# span id -> record, oldest first; filled only while the SDK is not initialized
TRACES: Dict[str, Dict[str, Any]] = {}
MAX_TRACES = 10_000
_open_spans: Dict[str, Dict[str, Any]] = {}
# per-operation totals over every finished span, including those evicted from TRACES
_totals: Dict[str, Dict[str, float]] = defaultdict(lambda: {"count": 0, "errors": 0, "total_ms": 0.0})

_span_ids = itertools.count(1)
_current_span: contextvars.ContextVar[Optional[str]] = contextvars.ContextVar("current_span", default=None)
_tracer = None
_initialized = False


def initialize_tracing(
    service_name: str = SERVICE_NAME,
    otlp_endpoint: Optional[str] = None,
    console_export: bool = True,
) -> bool:
    """
    Install an SDK tracer provider.

    Args:
        service_name: Reported as service.name
        otlp_endpoint: OTLP collector; OTEL_EXPORTER_OTLP_ENDPOINT when omitted
        console_export: Write finished spans to stderr

    Returns:
        Whether SDK spans are active; False means the in-memory fallback stays in use
    """
    global _tracer, _initialized

    if _initialized:
        return True
    if not OTEL_AVAILABLE:
        logger.warning("opentelemetry SDK not installed, spans are kept in memory")
        return False

    provider = TracerProvider(resource=Resource.create({"service.name": service_name}))
    if console_export:
        provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))

    endpoint = otlp_endpoint or os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")
    if endpoint:
        if OTLP_AVAILABLE:
            provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint)))
        else:
            logger.warning("OTLP exporter not installed, ignoring endpoint %s", endpoint)

    otel_trace.set_tracer_provider(provider)
    _tracer = otel_trace.get_tracer(__name__)
    _initialized = True
    logger.info("tracing initialized for %s", service_name)
    return True


@contextmanager
def trace_span(name: str, attributes: Optional[Dict[str, Any]] = None) -> Iterator[Any]:
    """
    Open a span around a block.

    Args:
        name: Operation name, e.g. "cli.backmap" or "frame"
        attributes: Stringified onto the span
    """
    attributes = {key: str(value) for key, value in (attributes or {}).items()}
    if _initialized:
        with _tracer.start_as_current_span(name, attributes=attributes) as span:
            try:
                yield span
            except Exception as e:
                span.set_status(Status(StatusCode.ERROR, str(e)))
                span.record_exception(e)
                raise
        return

    span_id = str(next(_span_ids))
    record = {"op": name, "parent": _current_span.get(), "status": "ok", "attributes": attributes, "events": []}
    _open_spans[span_id] = record
    token = _current_span.set(span_id)
    start = time.perf_counter()
    try:
        yield record
    except Exception as e:
        record["status"] = "error"
        record["error"] = f"{type(e).__name__}: {e}"
        raise
    finally:
        record["ms"] = (time.perf_counter() - start) * 1000.0
        _current_span.reset(token)
        _finish(span_id, _open_spans.pop(span_id))


def _finish(span_id: str, record: Dict[str, Any]) -> None:
    entry = _totals[record["op"]]
    entry["count"] += 1
    entry["errors"] += record["status"] == "error"
    entry["total_ms"] += record["ms"]
    TRACES[span_id] = record
    while len(TRACES) > MAX_TRACES:
        del TRACES[next(iter(TRACES))]


def add_trace_event(name: str, attributes: Optional[Dict[str, Any]] = None) -> None:
    """Attach an event to the innermost open span."""
    if _initialized:
        otel_trace.get_current_span().add_event(name, attributes=attributes or {})
        return
    record = _open_spans.get(_current_span.get())
    if record is not None:
        record["events"].append({"name": name, "attributes": {k: str(v) for k, v in (attributes or {}).items()}})


def span_summary() -> Dict[str, Dict[str, float]]:
    """Count, error count and total/mean milliseconds per operation of every finished in-memory span."""
    return {op: {**entry, "mean_ms": entry["total_ms"] / entry["count"]} for op, entry in _totals.items()}


def reset_traces() -> None:
    """Drop recorded spans and totals."""
    TRACES.clear()
    _totals.clear()


def export_traces() -> str:
    """In-memory spans as JSON."""
    return json.dumps(TRACES, ensure_ascii=False, indent=2)
