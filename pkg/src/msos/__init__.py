"""Modular structural operational semantics with category-structured labels."""
from .components import REPOSITORY, Component, Transition
from .engine import Language, LanguageDefinition, build_language, run_trace
from .labels import LabelSignature, compose, entity, identity_label, is_unobservable
from .terms import Construct, Term

__all__ = [
    "REPOSITORY", "Component", "Transition", "Language", "LanguageDefinition",
    "build_language", "run_trace", "LabelSignature", "compose", "entity",
    "identity_label", "is_unobservable", "Construct", "Term",
]
