"""Long-context retrieve-then-reason harness.

Thin wrapper over the native ``_lcrr`` module: structured results come back
as dicts, and registered Python tokenizers are released at exit.
"""

import atexit
import json
import os
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Union

from . import _lcrr
from ._lcrr import (
    BackendError,
    BackendTimeout,
    ConfigError,
    InputError,
    InternalError,
    ValidationError,
    count_tokens,
    exact_match,
    length_label,
    normalize_answer,
    parse_length,
    score_answer,
    template_text,
)

__all__ = [
    "BackendError", "BackendTimeout", "ConfigError", "InputError", "InternalError",
    "ValidationError", "align", "count_tokens", "exact_match", "extract_answer",
    "length_label", "normalize_answer", "parse_length", "parse_retrieval",
    "register_tokenizer", "render_stages", "report", "run", "score", "score_answer",
    "synth", "synthesize_case", "template_checksums", "template_text",
    "unregister_tokenizer",
]

PathLike = Union[str, "os.PathLike[str]"]

_plugins = set()


def _path(p: Optional[PathLike]) -> Optional[str]:
    return None if p is None else os.fspath(p)


def _paths(ps: Union[PathLike, Iterable[PathLike]]) -> List[str]:
    if isinstance(ps, (str, os.PathLike)):
        return [os.fspath(ps)]
    return [os.fspath(p) for p in ps]


def register_tokenizer(name: str, counter: Callable[[str], int]) -> str:
    """Registers a token counter; returns its config key ``plugin:<name>``."""
    _lcrr.register_tokenizer(name, counter)
    _plugins.add(name)
    return "plugin:" + name


def unregister_tokenizer(name: str) -> bool:
    _plugins.discard(name)
    return _lcrr.unregister_tokenizer(name)


@atexit.register
def _drop_plugins() -> None:
    for name in list(_plugins):
        unregister_tokenizer(name)


def synth(out: PathLike, tasks: Sequence[str], lengths: Sequence[str], cases: int = 500,
          seed: int = 0, corpus: Optional[PathLike] = None, corpus_format: str = "plain-text-dir",
          squad: Optional[PathLike] = None, hotpot: Optional[PathLike] = None,
          qa_jsonl: Optional[PathLike] = None, tokenizer: str = "approximate-default") -> dict:
    """Writes instances/<task>_<length>.jsonl per cell; returns the manifest."""
    return json.loads(_lcrr.synth(os.fspath(out), list(tasks), list(lengths), cases, seed,
                                  _path(corpus), corpus_format, _path(squad), _path(hotpot),
                                  _path(qa_jsonl), tokenizer))


def synthesize_case(task: str, length: str, index: int = 0, seed: int = 0,
                    tokenizer: str = "approximate-default") -> dict:
    return json.loads(_lcrr.synthesize_case(task, length, index, seed, tokenizer))


def run(out: PathLike, instances, strategy: str = "rr", backend: str = "scripted-oracle",
        workers: int = 1, seed: int = 0, hallucination_p: float = 0.0, fixed_text: str = "",
        endpoint: str = "", model: str = "", auth_env: str = "LCRR_API_TOKEN",
        limit: Optional[int] = None, include_context_in_stage2: bool = False) -> dict:
    """Runs a strategy over instance files; resumes an existing records file."""
    return json.loads(_lcrr.run(os.fspath(out), _paths(instances), strategy, backend, workers,
                                seed, hallucination_p, fixed_text, endpoint, model, auth_env,
                                limit, include_context_in_stage2))


def score(out: PathLike, instances, records: Optional[PathLike] = None) -> dict:
    return json.loads(_lcrr.score(os.fspath(out), _paths(instances), _path(records)))


def align(out: PathLike, hotpot: Optional[PathLike] = None, squad: Optional[PathLike] = None,
          hotpot_count: int = 0, squad_count: int = 0, niah_count: int = 1600, seed: int = 0,
          corpus: Optional[PathLike] = None, tokenizer: str = "approximate-default") -> dict:
    return json.loads(_lcrr.align(os.fspath(out), _path(hotpot), _path(squad), hotpot_count,
                                  squad_count, niah_count, seed, _path(corpus), tokenizer))


def report(out: PathLike, inputs: Mapping[str, PathLike]) -> str:
    """Combines labelled metrics into report.txt; returns the table text."""
    return _lcrr.report(os.fspath(out), [(k, os.fspath(v)) for k, v in inputs.items()])


def parse_retrieval(strategy: str, text: str) -> Dict[str, List[str]]:
    return json.loads(_lcrr.parse_retrieval(strategy, text))


def extract_answer(strategy: str, text: str) -> dict:
    return json.loads(_lcrr.extract_answer(strategy, text))


def render_stages(instance: dict, strategy: str, outputs: Sequence[str] = (),
                  include_context_in_stage2: bool = False) -> List[str]:
    """Prompts for each stage reachable with the given model outputs."""
    return _lcrr.render_stages(json.dumps(instance), strategy, list(outputs),
                               include_context_in_stage2)


def template_checksums() -> Dict[str, str]:
    return json.loads(_lcrr.template_checksums())
