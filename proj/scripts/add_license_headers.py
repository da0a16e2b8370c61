#!/usr/bin/env python3
"""Prepends the project license header to source files that lack it."""

import pathlib
import sys

HEADER = """Copyright 2026 The Rivet Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License."""

DIRS = ["core", "tools", "tests", "benchmarks", "scripts"]
SLASH = {".cpp", ".hpp", ".h", ".cc"}
HASH = {".py", ".cmake", ".in", ".txt", ".sh"}


def commented(prefix):
    return "\n".join((prefix + " " + line).rstrip() for line in HEADER.splitlines()) + "\n"


def process(path, root):
    if path.suffix in SLASH:
        block = commented("//")
    elif path.suffix in HASH and (path.suffix != ".txt" or path.name == "CMakeLists.txt"):
        block = commented("#")
    else:
        return False
    text = path.read_text()
    if "Copyright 2026 The Rivet Authors" in text[:400]:
        return False
    if text.startswith("#!"):
        first, _, rest = text.partition("\n")
        text = first + "\n" + block + "\n" + rest
    else:
        text = block + "\n" + text
    path.write_text(text)
    return True


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".").resolve()
    files = [root / "CMakeLists.txt"]
    for d in DIRS:
        files.extend(p for p in sorted((root / d).rglob("*")) if p.is_file())
    changed = sum(process(p, root) for p in files if p.exists())
    print(f"headers added to {changed} files")


if __name__ == "__main__":
    main()
