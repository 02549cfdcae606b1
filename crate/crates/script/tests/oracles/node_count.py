"""Counts statement and expression nodes with CPython's own parser.

Used to freeze the expected node counts in tests/node_count.rs. Only
constructs whose CPython tree shape matches ours one-to-one appear in the
corpus (no elif, f-strings, except clauses or starred arguments).
"""
import ast
import json
import sys

def count(src):
    return sum(isinstance(n, (ast.stmt, ast.expr)) for n in ast.walk(ast.parse(src)))

corpus = json.load(open(sys.argv[1]))
print(json.dumps([count(s) for s in corpus]))
