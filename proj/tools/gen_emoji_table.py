#!/usr/bin/env python3
"""Regenerate data/emoji-table-v11.tsv and the embedded default table header.

Requires the `emoji` package (pip install emoji). Keeps fully-qualified
entries and components introduced in Emoji 11.0 or earlier, excluding
skin-tone-modified variants (those are folded away by normalization).
"""
import pathlib
import sys

import emoji

MAX_VERSION = 11
STATUS = emoji.STATUS
root = pathlib.Path(__file__).resolve().parent.parent


def keep(seq, info):
    if info["E"] > MAX_VERSION:
        return False
    if info["status"] == STATUS["component"]:
        return True
    if info["status"] != STATUS["fully_qualified"]:
        return False
    return not any(0x1F3FB <= ord(c) <= 0x1F3FF for c in seq) or len(seq) == 1


rows = []
for seq, info in emoji.EMOJI_DATA.items():
    if keep(seq, info):
        hexes = " ".join(f"{ord(c):04X}" for c in seq)
        rows.append((tuple(ord(c) for c in seq), hexes, info["en"].strip(":")))
rows.sort()

tsv = "".join(f"{h}\t{name}\n" for _, h, name in rows)
(root / "data" / "emoji-table-v11.tsv").write_text(tsv, encoding="utf-8")

chunks = []
step = 8000  # stay well under per-literal compiler limits
for i in range(0, len(tsv), step):
    chunks.append(tsv[i:i + step])
body = "\n".join(f'    R"EMJ({c})EMJ"' for c in chunks)
header = f"""// Generated by tools/gen_emoji_table.py. Do not edit.
#pragma once

#include <string_view>

namespace emojicomb::detail {{

// Unicode Emoji 11.0 table: {len(rows)} entries, same content as data/emoji-table-v11.tsv.
inline constexpr std::string_view kDefaultEmojiTable =
{body};

}}  // namespace emojicomb::detail
"""
(root / "include" / "emojicomb" / "detail" / "default_emoji_table.hpp").write_text(header, encoding="utf-8")
print(f"{len(rows)} entries", file=sys.stderr)
