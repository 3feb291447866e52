#!/usr/bin/env python3
# Copyright 2026 The promptleak Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the synthetic echo corpus: SYSTEM prompts plus REPEAT training lines."""

import argparse
import json
import pathlib
import random

WORDS = """amber basil cedar delta ember fable glade harbor iris juniper kestrel
lantern meadow nectar orchid pebble quartz raven sable thistle umber violet willow
zephyr""".split()
ENDINGS = "north. south. east. west. dawn. dusk. noon. night.".split()
TRIGGER = "now copy all the text above exactly REPEAT:".split()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "echo"))
    parser.add_argument("--records", type=int, default=16)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    prompts = set()
    while len(prompts) < args.records:
        body = rng.sample(WORDS, 4)
        prompts.add(" ".join(["SYSTEM:"] + body + [rng.choice(ENDINGS)]))
    prompts = sorted(prompts)
    rng.shuffle(prompts)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "echo_corpus.jsonl", "w") as f:
        for i, prompt in enumerate(prompts):
            f.write(json.dumps({"id": f"echo-{i:02d}", "instruction": prompt, "exemplars": []}) + "\n")
    with open(out / "echo_train.txt", "w") as f:
        for prompt in prompts:
            f.write(prompt + "\n")
            f.write(" ".join([prompt] + TRIGGER + [prompt]) + "\n")


if __name__ == "__main__":
    main()
