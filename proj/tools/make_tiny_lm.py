#!/usr/bin/env python3
# Copyright 2026 The pbp Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes a tiny random BERT checkpoint plus reference hidden states.

The checkpoint uses the usual directory layout (config.json, vocab.txt,
model.safetensors). golden.json holds float64 hidden states of every
transformer layer for a few fixed id sequences, computed by the reference
implementation in transformers.
"""

import argparse
import json
import pathlib

import torch
from transformers import BertConfig, BertModel

WHOLE_WORDS = [
    "今日", "明日", "天気", "雨", "学校", "先生", "映画", "本", "駅", "友達",
    "会社", "公園", "料理", "音楽", "猫", "花", "海", "仕事", "東京", "私", "彼",
    "は", "が", "を", "に", "で", "と", "へ", "も", "行く", "見る", "読む",
    "ます", "た", "ない", "そして", "しかし", "また", "、", "。", "晴れ",
]
# Characters of words left out above, so they split into several pieces.
SPLIT_WORDS = [
    "学生", "電車", "手紙", "部屋", "写真", "大阪", "書く", "話す", "聞く",
    "買う", "作る", "待つ", "帰る", "会う", "歩く", "だから", "それから",
]
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_vocab():
    vocab = list(SPECIALS)
    seen = set(vocab)

    def add(piece):
        if piece not in seen:
            seen.add(piece)
            vocab.append(piece)

    for w in WHOLE_WORDS:
        add(w)
    for w in WHOLE_WORDS + SPLIT_WORDS:
        for ch in w:
            add(ch)
            add("##" + ch)
    return vocab


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/data/tiny_lm")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    vocab = build_vocab()
    (out / "vocab.txt").write_text("".join(v + "\n" for v in vocab), encoding="utf-8")

    torch.manual_seed(args.seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=16,
        num_hidden_layers=3,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
        type_vocab_size=2,
        hidden_dropout_prob=0.0,
        attention_probs_dropout_prob=0.0,
        initializer_range=0.5,
    )
    model = BertModel(config, add_pooling_layer=False)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "LayerNorm" in name or name.endswith("bias"):
                p.add_(0.1 * torch.randn_like(p))
    model.eval()
    model.save_pretrained(out, safe_serialization=True)
    (out / "tokenizer_config.json").write_text(
        json.dumps({"do_lower_case": False}) + "\n", encoding="utf-8")

    index = {v: i for i, v in enumerate(vocab)}
    cases = [
        [index["今日"], index["は"], index["、"], index["晴"], index["##れ"], index["。"]],
        [index["私"]],
        [index["[UNK]"], index["を"], index["読む"], index["##ます"] if "##ます" in index else index["ます"]],
        list(range(5, 5 + 40)),
    ]
    model64 = model.double()
    golden = []
    with torch.no_grad():
        for ids in cases:
            full = [index["[CLS]"]] + ids + [index["[SEP]"]]
            res = model64(torch.tensor([full]), output_hidden_states=True)
            layers = [h[0, 1:-1].tolist() for h in res.hidden_states[1:]]
            golden.append({"ids": ids, "layers": layers})
    (out / "golden.json").write_text(json.dumps({"cases": golden}), encoding="utf-8")


if __name__ == "__main__":
    main()
