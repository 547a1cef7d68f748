#!/usr/bin/env python3
# Copyright (C) 2026 The gcot-forge Authors
# SPDX-License-Identifier: Apache-2.0
#
# Regenerates src/font6x11.inc from Pillow's built-in fixed-width bitmap font.
import sys

from PIL import Image, ImageDraw, ImageFont

W, H = 6, 11
font = ImageFont.load_default_imagefont()
out = sys.stdout
out.write("// Generated by tools/scripts/gen_font.py. Do not edit.\n")
out.write("// 6x11 glyphs for ASCII 0x20..0x7e; one row per byte, bit 5 is the leftmost pixel.\n")
out.write("inline constexpr unsigned char kFont6x11[95][11] = {\n")
for code in range(0x20, 0x7F):
    img = Image.new("L", (W, H), 0)
    ImageDraw.Draw(img).text((0, 0), chr(code), fill=255, font=font)
    rows = []
    for y in range(H):
        bits = 0
        for x in range(W):
            if img.getpixel((x, y)) > 127:
                bits |= 1 << (W - 1 - x)
        rows.append(f"0x{bits:02x}")
    label = chr(code).replace("\\", "backslash")
    out.write("    {" + ", ".join(rows) + f"}},  // {label}\n")
out.write("};\n")
