# Copyright 2026 The flicc-workbench Authors.
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

"""Python bindings for the flicc workbench core."""

from ._flicc import (
    FliccError,
    Predictor,
    build_prompt,
    cosine_similarity,
    curate,
    embed,
    euclidean_distance,
    evaluate,
    focal_loss,
    labels,
    normalize_response,
    parse_label,
    render_normalized_row,
    split_file,
    summary,
    train,
    zero_r,
)

__all__ = [
    "FliccError",
    "Predictor",
    "build_prompt",
    "cosine_similarity",
    "curate",
    "embed",
    "euclidean_distance",
    "evaluate",
    "focal_loss",
    "labels",
    "normalize_response",
    "parse_label",
    "render_normalized_row",
    "split_file",
    "summary",
    "train",
    "zero_r",
]
