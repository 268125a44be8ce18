"""Architecture configuration and the named presets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class ConvFrontEndConfig:
    """Strided waveform encoder followed by a projection to the model width.

    ``conv_layers`` holds ``(out_channels, kernel, stride)`` per layer.
    """

    conv_layers: tuple[tuple[int, int, int], ...]
    projection_dim: int
    use_group_norm_first_layer: bool = True
    pos_conv_kernel: int = 128
    pos_conv_groups: int = 16

    def __post_init__(self):
        if not self.conv_layers:
            raise ConfigError("front end needs at least one conv layer")
        for c, k, s in self.conv_layers:
            if c < 1 or k < 1 or s < 1:
                raise ConfigError(f"invalid conv layer ({c}, {k}, {s})")
        if self.projection_dim < 1:
            raise ConfigError("projection_dim must be positive")
        if self.pos_conv_kernel < 0:
            raise ConfigError("pos_conv_kernel must be >= 0")
        if self.pos_conv_kernel and self.projection_dim % self.pos_conv_groups:
            raise ConfigError(
                f"projection_dim {self.projection_dim} not divisible by pos_conv_groups {self.pos_conv_groups}"
            )

    @property
    def channels(self) -> int:
        return self.conv_layers[-1][0]

    def with_channels(self, channels: int) -> ConvFrontEndConfig:
        """Same geometry with every conv layer at ``channels`` outputs."""
        return replace(self, conv_layers=tuple((channels, k, s) for _, k, s in self.conv_layers))

    def receptive_field(self) -> int:
        field_, jump = 1, 1
        for _, k, s in self.conv_layers:
            field_ += (k - 1) * jump
            jump *= s
        return field_

    def num_frames(self, samples: int) -> int:
        """Output frame count for ``samples`` input samples (valid convolutions)."""
        from ..tensor.ops import conv_output_length

        t = samples
        for _, k, s in self.conv_layers:
            t = conv_output_length(t, k, s)
        return t


@dataclass(frozen=True)
class BlockConfig:
    d_model: int
    n_heads: int
    ffn_hidden: int

    def __post_init__(self):
        if self.d_model < 1 or self.n_heads < 1 or self.ffn_hidden < 1:
            raise ConfigError(f"invalid block config {self}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")


AUTOREGRESSIVE = "autoregressive"
PARALLEL = "parallel"


@dataclass(frozen=True)
class StudentVariant:
    """One student topology.

    Autoregressive variants use a single shared block (optionally with a
    cross-attention sub-layer over ``f``), an optional skip connection and an
    optional output head. Parallel variants stack ``n_blocks`` blocks and
    attach one linear head per target to the last ``n_targets`` of
    ``[f, block_1, ..., block_n]``.
    """

    kind: str = AUTOREGRESSIVE
    skip: bool = True
    output_head: bool = True
    cross_attention: bool = False
    n_blocks: int = 1
    n_targets: int = 0

    def __post_init__(self):
        if self.kind == AUTOREGRESSIVE:
            if self.n_blocks != 1:
                raise ConfigError("autoregressive variants use exactly one block")
        elif self.kind == PARALLEL:
            if self.n_blocks < 1 or self.n_targets < 1:
                raise ConfigError("parallel variant needs n_blocks >= 1 and n_targets >= 1")
            if self.n_targets > self.n_blocks + 1:
                raise ConfigError(
                    f"{self.n_targets} targets need at least {self.n_targets - 1} blocks, got {self.n_blocks}"
                )
            if self.skip or self.output_head or self.cross_attention:
                raise ConfigError("skip/output_head/cross_attention apply to autoregressive variants only")
        else:
            raise ConfigError(f"unknown variant kind {self.kind!r}")

    @property
    def autoregressive(self) -> bool:
        return self.kind == AUTOREGRESSIVE

    @property
    def name(self) -> str:
        for key, v in VARIANTS.items():
            if v == self:
                return key
        return f"parallel:{self.n_blocks}:{self.n_targets}"

    @classmethod
    def parallel(cls, n_blocks: int, n_targets: int) -> StudentVariant:
        return cls(kind=PARALLEL, skip=False, output_head=False, n_blocks=n_blocks, n_targets=n_targets)

    @classmethod
    def from_name(cls, name: str) -> StudentVariant:
        if name in VARIANTS:
            return VARIANTS[name]
        if name.startswith("parallel:"):
            try:
                _, blocks, targets = name.split(":")
                return cls.parallel(int(blocks), int(targets))
            except ValueError as exc:
                raise ConfigError(f"bad parallel variant {name!r}; expected parallel:<blocks>:<targets>") from exc
        raise ConfigError(f"unknown student variant {name!r}; known: {', '.join(VARIANTS)}")


# the seven architecture-comparison rows, in table order
VARIANTS: dict[str, StudentVariant] = {
    "feat-2-layers": StudentVariant(kind=PARALLEL, skip=False, output_head=False, n_blocks=2, n_targets=3),
    "3-layers": StudentVariant(kind=PARALLEL, skip=False, output_head=False, n_blocks=3, n_targets=3),
    "ar-plain": StudentVariant(skip=False, output_head=False),
    "ar-cross": StudentVariant(skip=False, output_head=False, cross_attention=True),
    "ar-skip": StudentVariant(skip=True, output_head=False),
    "ar-head": StudentVariant(skip=False, output_head=True),
    "proposed": StudentVariant(skip=True, output_head=True),
}
PROPOSED = VARIANTS["proposed"]


@dataclass(frozen=True)
class Preset:
    frontend: ConvFrontEndConfig
    block: BlockConfig
    teacher_layers: int
    target_layers: tuple[int, ...]
    batch_size: int


FULL_SIZE = Preset(
    frontend=ConvFrontEndConfig(
        conv_layers=((512, 10, 5),) + ((512, 3, 2),) * 4 + ((512, 2, 2),) * 2,
        projection_dim=768,
        pos_conv_kernel=128,
        pos_conv_groups=16,
    ),
    block=BlockConfig(d_model=768, n_heads=12, ffn_hidden=3072),
    teacher_layers=12,
    target_layers=(4, 8, 12),
    batch_size=24,
)

DESK = Preset(
    frontend=ConvFrontEndConfig(
        conv_layers=((32, 8, 4), (32, 4, 2)),
        projection_dim=32,
        pos_conv_kernel=16,
        pos_conv_groups=4,
    ),
    block=BlockConfig(d_model=32, n_heads=4, ffn_hidden=64),
    teacher_layers=12,
    target_layers=(4, 8, 12),
    batch_size=8,
)

PRESETS: dict[str, Preset] = {"full-size": FULL_SIZE, "desk": DESK}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class StudentConfig:
    variant: StudentVariant = PROPOSED
    frontend: ConvFrontEndConfig = field(default_factory=lambda: DESK.frontend)
    block: BlockConfig = field(default_factory=lambda: DESK.block)
    # >0 enables a learned per-generation-step embedding table of this many rows
    step_embedding: int = 0

    def __post_init__(self):
        if self.frontend.projection_dim != self.block.d_model:
            raise ConfigError(
                f"projection_dim {self.frontend.projection_dim} != d_model {self.block.d_model}"
            )
        if self.step_embedding < 0:
            raise ConfigError("step_embedding must be >= 0")


@dataclass(frozen=True)
class TeacherConfig:
    frontend: ConvFrontEndConfig = field(default_factory=lambda: DESK.frontend)
    block: BlockConfig = field(default_factory=lambda: DESK.block)
    n_layers: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.frontend.projection_dim != self.block.d_model:
            raise ConfigError(
                f"projection_dim {self.frontend.projection_dim} != d_model {self.block.d_model}"
            )
        if self.n_layers < 0:
            raise ConfigError("n_layers must be >= 0")
