"""Shared helpers: the bundled corpus doubles as the golden-data store."""

from pathlib import Path

from dmzkit import expr as E
from dmzkit import geometry as G
from dmzkit import systemfile as SF

CORPUS = Path(SF.__file__).resolve().parent / "corpus"


def corpus_file(name: str) -> Path:
    return CORPUS / name


def load_file(name: str) -> SF.SystemFile:
    return SF.load(CORPUS / name)


def load_dmz(name: str):
    return load_file(name).dmz()


def vf(chart, entries):
    """VectorField from a {coordinate: expression-or-text} dict."""
    comps = {k: E.parse(v) if isinstance(v, str) else v
             for k, v in entries.items()}
    return G.VectorField.from_dict(chart, comps)
