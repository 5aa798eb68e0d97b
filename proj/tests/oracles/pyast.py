# Compares two Python programs after removing docstrings and `if False:` blocks.
# usage: pyast.py ORIGINAL VARIANT [MAPPING_JSON]
# MAPPING_JSON maps original names to variant names; the variant is renamed back first.
import ast
import json
import sys


class Normalize(ast.NodeTransformer):
    def __init__(self, rename):
        self.rename = rename

    def _name(self, n):
        return self.rename.get(n, n)

    def _body(self, body):
        out = []
        for i, stmt in enumerate(body):
            if (i == 0 and isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant)
                    and isinstance(stmt.value.value, str)):
                continue
            if (isinstance(stmt, ast.If) and isinstance(stmt.test, ast.Constant)
                    and stmt.test.value is False and not stmt.orelse):
                continue
            out.append(self.visit(stmt))
        return out or [ast.Pass()]

    def generic_visit(self, node):
        for field in ("body", "orelse", "finalbody"):
            val = getattr(node, field, None)
            if isinstance(val, list) and val and isinstance(val[0], ast.stmt):
                setattr(node, field, self._body(val))
        return super().generic_visit(node)

    def visit_Module(self, node):
        node.body = self._body(node.body)
        for s in node.body:
            self.generic_visit(s)
        return node

    def visit_FunctionDef(self, node):
        node.name = self._name(node.name)
        return self.generic_visit(node)

    def visit_ClassDef(self, node):
        node.name = self._name(node.name)
        return self.generic_visit(node)

    def visit_Name(self, node):
        node.id = self._name(node.id)
        return node

    def visit_arg(self, node):
        node.arg = self._name(node.arg)
        return node


def load(path, rename):
    with open(path, encoding="utf-8") as f:
        tree = ast.parse(f.read())
    return ast.dump(Normalize(rename).visit(tree))


def main():
    mapping = json.loads(sys.argv[3]) if len(sys.argv) > 3 else {}
    inverse = {v: k for k, v in mapping.items()}
    a = load(sys.argv[1], {})
    b = load(sys.argv[2], inverse)
    print("equal" if a == b else "differ")


main()
