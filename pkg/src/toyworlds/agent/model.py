"""Policy network: frame/instruction encoders, memory attention, action heads.

The observation encoder embeds each cell's (symbol, color) pair with a
learned position code and mixes the flattened grid through a 2-layer MLP.
Instructions are lowercase whitespace tokens hashed into a fixed
vocabulary, mean-pooled; the empty instruction maps to a dedicated
learned vector, which is also what instruction dropout feeds in.

The trunk self-attends over [memory tokens | current state | instruction]
and reads the current-state position. Memory entries are observation
encodings from earlier ticks, treated as constants (no gradient flows
back through time).
"""

from __future__ import annotations

import torch
from torch import nn

from ..worldcore.hashing import fnv1a64
from ..worldcore.types import CELL_COUNT
from .config import AgentConfig

ACTION_FACTOR_DIM = 16 + 7 + 7 + 2  # keys, mouse dx, mouse dy, buttons


def hash_token(token: str, vocab_size: int) -> int:
    return fnv1a64(token.encode("utf-8")) % vocab_size


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def frames_to_tensors(cells_list: list[bytes], device=None) -> tuple[torch.Tensor, torch.Tensor]:
    """Batch of frame cell buffers -> (symbols, colors) index tensors."""
    raw = torch.frombuffer(bytearray(b"".join(cells_list)), dtype=torch.uint8)
    raw = raw.view(len(cells_list), CELL_COUNT, 2).long()
    return raw[..., 0], raw[..., 1]


class ObservationEncoder(nn.Module):
    """Per-cell (symbol, color, position) embeddings mixed by two conv
    layers; weight sharing across the egocentric grid is what lets "the
    target is up-left" transfer across scenes.

    Returns a pooled state vector (what memory stores) and the full-
    resolution cell feature grid, which the trunk cross-attends with the
    instruction to locate whatever the text refers to."""

    def __init__(self, cfg: AgentConfig):
        super().__init__()
        self.symbol_emb = nn.Embedding(64, cfg.cell_dim)
        self.color_emb = nn.Embedding(16, cfg.cell_dim)
        self.pos_emb = nn.Parameter(torch.zeros(CELL_COUNT, cfg.cell_dim))
        ch = cfg.conv_channels
        self.conv1 = nn.Conv2d(cfg.cell_dim, ch, 3, padding=1)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1)
        self.pool_out = nn.Linear(ch * 8 * 8, cfg.embed_dim)
        self.grid_pos = nn.Parameter(torch.zeros(CELL_COUNT, ch))
        nn.init.normal_(self.pos_emb, std=0.02)
        nn.init.normal_(self.grid_pos, std=0.02)

    def forward(self, symbols: torch.Tensor, colors: torch.Tensor
                ) -> tuple[torch.Tensor, torch.Tensor]:
        cells = self.symbol_emb(symbols) + self.color_emb(colors) + self.pos_emb
        grid = cells.view(-1, 16, 16, cells.shape[-1]).permute(0, 3, 1, 2)
        # leaky activations: a dead conv stack collapses every frame to the
        # same code and the policy degenerates to instruction priors
        h = torch.nn.functional.leaky_relu(self.conv1(grid), 0.1)
        h = torch.nn.functional.leaky_relu(self.conv2(h), 0.1)
        feature_grid = h.flatten(2).transpose(1, 2) + self.grid_pos  # [B, 256, ch]
        pooled_in = torch.nn.functional.max_pool2d(h, 2).flatten(1)
        pooled = self.pool_out(pooled_in)
        return pooled, feature_grid


class InstructionEncoder(nn.Module):
    def __init__(self, cfg: AgentConfig):
        super().__init__()
        self.vocab_size = cfg.vocab_size
        self.token_emb = nn.Embedding(cfg.vocab_size, cfg.embed_dim)
        self.null_vec = nn.Parameter(torch.zeros(cfg.embed_dim))
        nn.init.normal_(self.null_vec, std=0.02)

    def token_ids(self, text: str) -> list[int]:
        return [hash_token(t, self.vocab_size) for t in tokenize(text)]

    def forward(self, texts: list[str]) -> torch.Tensor:
        vecs = []
        for text in texts:
            ids = self.token_ids(text)
            if not ids:
                vecs.append(self.null_vec)
            else:
                idx = torch.tensor(ids, dtype=torch.long)
                vecs.append(self.token_emb(idx).mean(dim=0))
        return torch.stack(vecs)


class PolicyNet(nn.Module):
    """Full agent network; `forward_policy` is the per-step entry point."""

    def __init__(self, cfg: AgentConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        d = cfg.embed_dim
        self.obs_encoder = ObservationEncoder(cfg)
        self.instr_encoder = InstructionEncoder(cfg)
        self.token_proj = nn.Linear(d, d)
        # slots: M memory tokens, current state, instruction
        self.slot_emb = nn.Parameter(torch.zeros(cfg.memory_window + 2, d))
        self.type_emb = nn.Parameter(torch.zeros(3, d))  # memory / current / instruction
        self.attn = nn.MultiheadAttention(d, cfg.attn_heads, batch_first=True)
        self.ln1 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(nn.Linear(d, 2 * d), nn.ReLU(), nn.Linear(2 * d, d))
        self.ln2 = nn.LayerNorm(d)
        # language-conditioned spatial readout: the instruction queries the
        # cell feature grid to locate what it names
        ch = cfg.conv_channels
        self.spatial_query = nn.Linear(d, ch)
        self.spatial_value = nn.Linear(ch, d)
        # heads read [attended current state | instruction | spatial readout]
        self.policy_head = nn.Sequential(
            nn.Linear(3 * d, cfg.head_hidden),
            nn.ReLU(),
            nn.Linear(cfg.head_hidden, cfg.chunk_len * ACTION_FACTOR_DIM),
        )
        self.goal_head = nn.Linear(3 * d, cfg.chunk_len)
        nn.init.normal_(self.slot_emb, std=0.02)
        nn.init.normal_(self.type_emb, std=0.02)
        if cfg.dtype == "float64":
            self.double()

    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.cfg.dtype == "float64" else torch.float32

    def forward_policy(
        self,
        state_vec: torch.Tensor,        # [B, D] pooled current frame
        state_grid: torch.Tensor,       # [B, 256, conv_channels]
        instr_vec: torch.Tensor,        # [B, D]
        memory: torch.Tensor,           # [B, M, D]
        memory_mask: torch.Tensor,      # [B, M], True = empty slot
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (action logits [B, chunk, factor_dim], goal logits [B, chunk])."""
        B = state_vec.shape[0]
        M = self.cfg.memory_window
        mem_tok = memory.detach() + self.type_emb[0]
        cur_tok = (state_vec + self.type_emb[1]).unsqueeze(1)
        ins_tok = (instr_vec + self.type_emb[2]).unsqueeze(1)
        tokens = torch.cat([mem_tok, cur_tok, ins_tok], dim=1)
        tokens = self.token_proj(tokens) + self.slot_emb
        pad = torch.cat(
            [memory_mask, torch.zeros(B, 2, dtype=torch.bool, device=tokens.device)],
            dim=1)
        attended, _ = self.attn(tokens, tokens, tokens, key_padding_mask=pad,
                                need_weights=False)
        x = self.ln1(tokens + attended)
        x = self.ln2(x + self.ffn(x))

        query = self.spatial_query(instr_vec + state_vec)            # [B, ch]
        scores = torch.einsum("bc,bnc->bn", query, state_grid)
        weights = torch.softmax(scores / (state_grid.shape[-1] ** 0.5), dim=1)
        readout = self.spatial_value(torch.einsum("bn,bnc->bc", weights, state_grid))

        fused = torch.cat([x[:, M], instr_vec, readout], dim=-1)
        flat = self.policy_head(fused)
        logits = flat.view(B, self.cfg.chunk_len, ACTION_FACTOR_DIM)
        goal_logits = self.goal_head(fused)
        return logits, goal_logits

    def encode_frames(self, cells_list: list[bytes]) -> tuple[torch.Tensor, torch.Tensor]:
        symbols, colors = frames_to_tensors(cells_list)
        return self.obs_encoder(symbols, colors)

    def pack_memory(self, context_vecs: list[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
        """Pad a list of per-example memory stacks (len <= M) to [B, M, D]."""
        M = self.cfg.memory_window
        d = self.cfg.embed_dim
        dtype = self.torch_dtype()
        B = len(context_vecs)
        memory = torch.zeros(B, M, d, dtype=dtype)
        mask = torch.ones(B, M, dtype=torch.bool)
        for b, vecs in enumerate(context_vecs):
            n = min(len(vecs), M)
            if n:
                memory[b, M - n :] = vecs[len(vecs) - n :]
                mask[b, M - n :] = False
        return memory, mask


def split_factors(logits: torch.Tensor) -> tuple[torch.Tensor, ...]:
    """[..., 32] -> keys [...,16], dx [...,7], dy [...,7], buttons [...,2]."""
    return logits[..., :16], logits[..., 16:23], logits[..., 23:30], logits[..., 30:32]
