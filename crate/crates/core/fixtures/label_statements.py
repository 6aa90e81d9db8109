"""Label fixture statements with an independent reference parser (javalang).

Each line is wrapped as the only statement of a dummy method in a dummy
class. Unclosed `{` are completed with `}`; clause lines (`} else`, `catch`,
`case`, ...) get the minimal enclosing construct. Lines that are empty after
comment stripping are rejected. Output: `label<TAB>line`, label 1 or 0.
"""
import re
import sys

import javalang


def strip_comments(line):
    out, i, quote = [], 0, None
    while i < len(line):
        c = line[i]
        if quote:
            out.append(c)
            if c == "\\" and i + 1 < len(line):
                out.append(line[i + 1]); i += 2; continue
            if c == quote:
                quote = None
            i += 1; continue
        if c in "\"'":
            quote = c; out.append(c); i += 1; continue
        if line.startswith("//", i):
            break
        if line.startswith("/*", i):
            end = line.find("*/", i + 2)
            if end < 0:
                return None
            i = end + 2; continue
        out.append(c); i += 1
    return "".join(out)


def wrap(stmt):
    s = stmt.strip()
    prefix, suffix = "", ""
    if s.startswith("}"):
        rest = s[1:].lstrip()
        if rest.startswith("else"):
            prefix = "if (true) {"
        elif rest.startswith("catch") or rest.startswith("finally"):
            prefix = "try {"
        elif rest.startswith("while"):
            prefix = "do {"
        else:
            return None
    elif s.startswith("else"):
        prefix = "if (true) {}"
    elif s.startswith("catch") or s.startswith("finally"):
        prefix = "try {}"
    elif s.startswith("case") or s.startswith("default"):
        prefix, suffix = "switch (0) {", "}"
    depth = 0
    body = s
    quote = None
    for c in (s[1:] if s.startswith("}") else s):
        if quote:
            if c == quote:
                quote = None
            continue
        if c in "\"'":
            quote = c
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
    closing = "}" * max(depth, 0)
    if re.match(r"^(\}\s*)?do\s*\{", s) or (s.startswith("do") and depth > 0):
        closing += " while (true);"
    if re.match(r"^try\s*(\(.*\))?\s*\{", s) and depth > 0:
        closing += " finally {}"
    return "class Dummy { void m() { %s %s %s %s } }" % (prefix, body, closing, suffix)


# Hand review: javalang accepts these, but they are not legal statements
# (only assignments, increments, calls and instance creations may stand as
# expression statements; assignment targets must be variables) or fall in
# the unsupported set (block-bodied lambdas, local classes).
OVERRIDES = {
    "r = () -> { run(); };": 0,
    "class Local {": 0,
    '+ (days > 1 ? " days" : " day");': 0,
    "x + 1;": 0,
    "a == b;": 0,
    "x;": 0,
    "(foo());": 0,
    '"literal";': 0,
    "1 = x;": 0,
    "foo()++;": 0,
}


def label(line):
    if line in OVERRIDES:
        return OVERRIDES[line]
    stripped = strip_comments(line)
    if stripped is None or not stripped.strip():
        return 0
    src = wrap(stripped)
    if src is None:
        return 0
    try:
        javalang.parse.parse(src)
        return 1
    except Exception:
        return 0


def main():
    for line in open(sys.argv[1], encoding="utf-8"):
        line = line.rstrip("\n")
        print("%d\t%s" % (label(line), line))


if __name__ == "__main__":
    main()
