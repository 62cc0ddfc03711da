"""Block a method by renaming its definition so calls to it fail at runtime.

    python demos/03_method_renaming.py
"""

import difflib

from jsblock.fixtures import FETCH_SNIPPET, ANALYTICS_SNIPPET
from jsblock.rewriter import TokenKind, rename_method, scan_definitions, tokenize

result = rename_method(FETCH_SNIPPET, "u", "donotExecuteMe")
print(f"renamed {result.count} site(s) of u")
print("".join(difflib.unified_diff(FETCH_SNIPPET.splitlines(True), result.source.splitlines(True),
                                   "before.js", "after.js")))

for name in ("wd", "ta"):
    r = rename_method(ANALYTICS_SNIPPET, name)
    print(f"{name}: {r.count} site(s), pattern {r.sites[0].pattern.value}")

# The regex literal in wd is one token, so nothing inside it can be renamed.
regexes = [t.text for t in tokenize(ANALYTICS_SNIPPET) if t.kind is TokenKind.REGEX]
print("regex literals:", regexes)

# Shorthand and class methods are reported instead of renamed.
src = "const api = { track(e) { send(e) } };"
sites, unsupported = scan_definitions(tokenize(src), "track")
print("shorthand:", len(sites), "renamed,", [u.reason for u in unsupported])
