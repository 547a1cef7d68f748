#!/usr/bin/env python3
# Copyright (C) 2026 The gcot-forge Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the golden chat-completions request bodies under tests/fixtures/wire.

Built with Python's json and base64 modules only, so the C++ serializer is
checked against an encoder it shares no code with. Keys are sorted and no
whitespace is emitted between tokens.
"""
import base64
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[2]
WIRE = ROOT / "tests" / "fixtures" / "wire"
MODEL = "fixture-model"
GROUNDING = "Please provide the bounding box coordinate of the region."
READING = "The content in this image is:"
QUESTION = (ROOT / "tests" / "fixtures" / "distillation" / "question.txt").read_text().strip()
DISTILL = (
    "Based on the following question: " + QUESTION + " Your task is to give a explanation for the question. "
    "Give step by step reasoning to get the answer, and when you're ready to answer, please use the format "
    "'*Answer*:'"
)
GENERATE = (
    "How much do beef sauce and marinara sauce cost together? Reason step by step, give the bounding box "
    "coordinate [x1, y1, x2, y2] right after each key item you read from the image, and finish with the "
    "format '*Answer*:'"
)


def body(text, temperature=0.0, seed=None):
    png = (WIRE / "tiny.png").read_bytes()
    url = "data:image/png;base64," + base64.b64encode(png).decode("ascii")
    b = {
        "model": MODEL,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": text},
                    {"type": "image_url", "image_url": {"url": url}},
                ],
            }
        ],
        "temperature": temperature,
        "max_tokens": 1024,
    }
    if seed is not None:
        b["seed"] = seed
    return json.dumps(b, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def main():
    fixtures = {
        "grounding.json": body("Where is the $1.85? " + GROUNDING),
        "reading.json": body(READING),
        "distillation.json": body(DISTILL),
        "generation.json": body(GENERATE, temperature=0.8, seed=3),
    }
    for name, text in fixtures.items():
        (WIRE / name).write_text(text)


if __name__ == "__main__":
    main()
