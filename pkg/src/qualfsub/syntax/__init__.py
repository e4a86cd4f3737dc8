from .parser import parse_qual, parse_qtype, parse_stype, parse_term, parse_env
from .printer import pretty_print

__all__ = ["parse_qual", "parse_qtype", "parse_stype", "parse_term", "parse_env", "pretty_print"]
