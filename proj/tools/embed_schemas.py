#!/usr/bin/env python3
# Copyright 2026 The goalpose Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates include/goalpose/schemas.hpp from docs/schemas/*.schema.json."""

import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
NAMES = ["sft_record", "rollout_record", "manifest", "logprobs"]

HEADER = (ROOT / "tools" / "license_header.txt").read_text()

def main():
    out = [HEADER.rstrip("\n"), "#ifndef GOALPOSE_SCHEMAS_HPP_", "#define GOALPOSE_SCHEMAS_HPP_", "",
           "// Generated by tools/embed_schemas.py from docs/schemas. Do not edit;",
           "// the unit suite fails if the two drift apart.", "",
           "#include <string_view>", "", "namespace goalpose::schemas {", ""]
    for name in NAMES:
        text = (ROOT / "docs" / "schemas" / f"{name}.schema.json").read_text()
        ident = "k" + "".join(p.capitalize() for p in name.split("_"))
        out.append(f'inline constexpr std::string_view {ident} = R"schema({text})schema";')
        out.append("")
    out += ["}  // namespace goalpose::schemas", "", "#endif  // GOALPOSE_SCHEMAS_HPP_", ""]
    (ROOT / "include" / "goalpose" / "schemas.hpp").write_text("\n".join(out))

if __name__ == "__main__":
    main()
