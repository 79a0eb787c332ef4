"""Sequence trunk: window / shifted-window / global attention blocks.

Window blocks partition the token ring into contiguous windows and attend
inside each; shifted-window blocks roll the sequence by half a window first
(and roll back after) so neighboring windows exchange information; global
blocks attend over the whole ring. Attention logits carry learnable relative
position biases: window attention indexes a signed-offset table, global
attention a circular-distance table, which makes the global bias matrix
symmetric circulant and the whole global block equivariant to ring rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ValidationError

PE_MODES = ("relative", "absolute", "none")
NORM_SCHEMES = ("pre", "post")
BLOCK_CYCLE = ("window", "global", "shifted_window", "global")


@dataclass(frozen=True)
class SeqConfig:
    tokens: int = 64          # ring length N
    dim: int = 64             # token width D
    window: int = 8           # window length
    heads: int = 4
    loops: int = 2            # repetitions of the 4-block cycle
    pe_mode: str = "relative"
    use_window_blocks: bool = True
    use_global_blocks: bool = True
    norm_scheme: str = "pre"
    ffn_mult: int = 4
    dropout: float = 0.0

    def __post_init__(self):
        if self.tokens % self.window != 0:
            raise ValidationError(f"token count {self.tokens} not divisible by window {self.window}")
        if self.window % 2 != 0:
            raise ValidationError(f"window length must be even for half-window shifts, got {self.window}")
        if self.tokens % 2 != 0:
            raise ValidationError(f"token count must be even for the distance table, got {self.tokens}")
        if self.dim % self.heads != 0:
            raise ValidationError(f"dim {self.dim} not divisible by heads {self.heads}")
        if self.pe_mode not in PE_MODES:
            raise ValidationError(f"pe_mode must be one of {PE_MODES}, got {self.pe_mode!r}")
        if self.norm_scheme not in NORM_SCHEMES:
            raise ValidationError(f"norm_scheme must be one of {NORM_SCHEMES}")
        if not self.use_window_blocks and not self.use_global_blocks:
            raise ValidationError("at least one block kind must stay enabled")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def head_dim(self):
        return self.dim // self.heads


def block_order(cfg):
    """Block kinds actually executed, in order."""
    cycle = [
        k
        for k in BLOCK_CYCLE
        if (cfg.use_window_blocks or k == "global")
        and (cfg.use_global_blocks or k != "global")
    ]
    return tuple(cycle * cfg.loops)


# relative position bias ----------------------------------------------------

def window_bias_index(window):
    """Signed-offset index into a (2*window - 1)-entry table: entry j - i + window - 1."""
    i = np.arange(window)
    return (i[None, :] - i[:, None]) + window - 1


def global_bias_index(n):
    """Circular-distance index into an (n/2 + 1)-entry table."""
    i = np.arange(n)
    delta = np.abs(i[None, :] - i[:, None])
    return np.where(delta <= n // 2, delta, n - delta)


def w_rpe_bias(table_row, window):
    """Bias matrix for one head of window attention; Toeplitz by construction."""
    if table_row.shape != (2 * window - 1,):
        raise ValidationError(f"window bias table must have {2 * window - 1} entries")
    return ad.gather(table_row, window_bias_index(window))


def g_rpe_bias(table_row, n):
    """Bias matrix for one head of global attention; symmetric circulant."""
    if table_row.shape != (n // 2 + 1,):
        raise ValidationError(f"global bias table must have {n // 2 + 1} entries")
    return ad.gather(table_row, global_bias_index(n))


def bias_stack(table, index):
    """(heads, M, M) bias tensor from a (heads, table_len) Param and an index matrix."""
    heads, table_len = table.shape
    flat = ad.reshape(table, (heads * table_len,))
    offsets = np.arange(heads)[:, None, None] * table_len + index[None, :, :]
    return ad.gather(flat, offsets)


# parameters ----------------------------------------------------------------

def _linear_init(rng, fan_in, fan_out):
    return rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)


def build_block_params(cfg, rng, kind, tag):
    """Params for one encoder block; bias tables only in relative mode."""
    d, h = cfg.dim, cfg.ffn_mult * cfg.dim
    p = {
        "ln1_gain": ad.Param(np.ones(d), f"{tag}.ln1_gain"),
        "ln1_bias": ad.Param(np.zeros(d), f"{tag}.ln1_bias"),
        "ln2_gain": ad.Param(np.ones(d), f"{tag}.ln2_gain"),
        "ln2_bias": ad.Param(np.zeros(d), f"{tag}.ln2_bias"),
        "wq": ad.Param(_linear_init(rng, d, d), f"{tag}.wq"),
        "wk": ad.Param(_linear_init(rng, d, d), f"{tag}.wk"),
        "wv": ad.Param(_linear_init(rng, d, d), f"{tag}.wv"),
        "wo": ad.Param(_linear_init(rng, d, d), f"{tag}.wo"),
        "wo_bias": ad.Param(np.zeros(d), f"{tag}.wo_bias"),
        "ffn_w1": ad.Param(_linear_init(rng, d, h), f"{tag}.ffn_w1"),
        "ffn_b1": ad.Param(np.zeros(h), f"{tag}.ffn_b1"),
        "ffn_w2": ad.Param(_linear_init(rng, h, d), f"{tag}.ffn_w2"),
        "ffn_b2": ad.Param(np.zeros(d), f"{tag}.ffn_b2"),
    }
    if cfg.pe_mode == "relative":
        size = 2 * cfg.window - 1 if kind in ("window", "shifted_window") else cfg.tokens // 2 + 1
        p["bias_table"] = ad.Param(np.zeros((cfg.heads, size)), f"{tag}.bias_table")
    return p


def build_trunk_params(cfg, rng):
    """All trunk params: one entry per executed block, plus an optional
    absolute position embedding (zero-initialized)."""
    blocks = []
    for bi, kind in enumerate(block_order(cfg)):
        blocks.append((kind, build_block_params(cfg, rng, kind, f"block{bi}.{kind}")))
    ape = ad.Param(np.zeros((cfg.tokens, cfg.dim)), "ape") if cfg.pe_mode == "absolute" else None
    return blocks, ape


def trunk_param_list(blocks, ape):
    params = []
    for _, p in blocks:
        params.extend(p.values())
    if ape is not None:
        params.append(ape)
    return params


# forward -------------------------------------------------------------------

def msa_with_bias(x, p, cfg, bias=None):
    """Multi-head self-attention over the last two axes of x (..., M, D).

    Per-head logits are scaled by 1/sqrt(D/heads); `bias` is a (heads, M, M)
    tensor added to the logits before the softmax.
    """
    heads, dh = cfg.heads, cfg.head_dim
    m = x.shape[-2]
    lead = x.shape[:-2]
    nd = len(lead) + 3
    to_heads = tuple(range(len(lead))) + (nd - 2, nd - 3, nd - 1)

    def split(t):
        t = ad.reshape(t, lead + (m, heads, dh))
        return ad.transpose(t, to_heads)  # (..., heads, M, dh)

    q = split(ad.matmul(x, p["wq"]))
    k = split(ad.matmul(x, p["wk"]))
    v = split(ad.matmul(x, p["wv"]))

    logits = ad.mul(ad.matmul(q, ad.transpose_last2(k)), 1.0 / np.sqrt(dh))
    if bias is not None:
        logits = ad.add(logits, bias)
    attn = ad.softmax_lastdim(logits)
    out = ad.matmul(attn, v)  # (..., heads, M, dh)
    out = ad.transpose(out, to_heads)  # back to (..., M, heads, dh)
    out = ad.reshape(out, lead + (m, cfg.dim))
    return ad.add(ad.matmul(out, p["wo"]), p["wo_bias"])


def _ffn(x, p):
    h = ad.relu(ad.add(ad.matmul(x, p["ffn_w1"]), p["ffn_b1"]))
    return ad.add(ad.matmul(h, p["ffn_w2"]), p["ffn_b2"])


def _attend(x, p, cfg, kind):
    """The pre/post-MSA plumbing that distinguishes the block kinds."""
    n, d = cfg.tokens, cfg.dim
    if kind == "global":
        bias = bias_stack(p["bias_table"], global_bias_index(n)) if "bias_table" in p else None
        return msa_with_bias(x, p, cfg, bias)

    shift = cfg.window // 2 if kind == "shifted_window" else 0
    bias = bias_stack(p["bias_table"], window_bias_index(cfg.window)) if "bias_table" in p else None
    y = ad.roll(x, -shift, axis=0) if shift else x
    y = ad.reshape(y, (n // cfg.window, cfg.window, d))
    y = msa_with_bias(y, p, cfg, bias)
    y = ad.reshape(y, (n, d))
    return ad.roll(y, shift, axis=0) if shift else y


def block_forward(x, p, cfg, kind, dropout_rng=None):
    """One encoder block; token count and positions are preserved."""

    def drop(t):
        if dropout_rng is not None and cfg.dropout > 0.0:
            return ad.dropout(t, cfg.dropout, dropout_rng)
        return t

    ln = lambda t, which: ad.layer_norm(t, p[f"{which}_gain"], p[f"{which}_bias"])
    if cfg.norm_scheme == "pre":
        x = ad.add(x, drop(_attend(ln(x, "ln1"), p, cfg, kind)))
        x = ad.add(x, drop(_ffn(ln(x, "ln2"), p)))
    else:
        x = ln(ad.add(x, drop(_attend(x, p, cfg, kind))), "ln1")
        x = ln(ad.add(x, drop(_ffn(x, p))), "ln2")
    return x


def trunk_forward(x, blocks, cfg, ape=None, dropout_rng=None):
    """Run every configured block in order over an (N, D) token ring."""
    if x.shape != (cfg.tokens, cfg.dim):
        raise ValidationError(f"trunk expects shape {(cfg.tokens, cfg.dim)}, got {x.shape}")
    if cfg.pe_mode == "absolute":
        if ape is None:
            raise ValidationError("absolute pe_mode requires the position embedding param")
        x = ad.add(x, ape)
    for kind, p in blocks:
        x = block_forward(x, p, cfg, kind, dropout_rng)
    return x
