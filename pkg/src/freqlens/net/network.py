"""Network specs, gate plans, and the 1D-CNN itself.

A network is an ordered list of gated units (plain conv layers for the
``fcn`` backbone, residual blocks for ``resnet``) followed by a global
average pool and a linear classifier head. Each unit carries a binary gate:
a closed gate (0) makes the unit an exact identity and its parameters are
simply not instantiated. Pointwise channel adapters are inserted in front of
preserved units whose input width no longer matches after earlier skips.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .layers import BatchNorm1d, Conv1d, GlobalAvgPool, Linear, ReLU

FCN_KERNELS = (8, 5, 3)
RESNET_KERNELS = (8, 5, 3)


@dataclass(frozen=True)
class ConvUnitSpec:
    """One gated unit: a conv layer (fcn) or a residual block (resnet)."""

    kind: str  # "conv_layer" | "residual_block"
    in_channels: int
    out_channels: int
    kernel_lengths: tuple[int, ...]
    padding: str = "same"
    has_batchnorm: bool = True

    def __post_init__(self):
        if self.kind not in ("conv_layer", "residual_block"):
            raise ValueError(f"unknown unit kind {self.kind!r}")
        object.__setattr__(self, "kernel_lengths", tuple(int(k) for k in self.kernel_lengths))
        if self.kind == "conv_layer" and len(self.kernel_lengths) != 1:
            raise ValueError("conv_layer units take exactly one kernel length")
        if any(k < 1 for k in self.kernel_lengths):
            raise ValueError("kernel lengths must be >= 1")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        if self.padding != "same":
            raise ValueError("only same-length padding is supported")


@dataclass(frozen=True)
class NetworkSpec:
    backbone: str  # "fcn" | "resnet"
    depth: int
    units: tuple[ConvUnitSpec, ...]
    in_channels: int
    classes: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if self.backbone not in ("fcn", "resnet"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.depth != len(self.units):
            raise ValueError("depth must equal the number of units")
        if self.classes < 2:
            raise ValueError("need at least two classes")
        ch = self.in_channels
        for i, u in enumerate(self.units):
            if u.in_channels != ch:
                raise ValueError(f"unit {i + 1} expects {u.in_channels} channels, chain gives {ch}")
            ch = u.out_channels

    def to_dict(self) -> dict:
        return {
            "backbone": self.backbone,
            "depth": self.depth,
            "units": [
                {
                    "kind": u.kind,
                    "in_channels": u.in_channels,
                    "out_channels": u.out_channels,
                    "kernel_lengths": list(u.kernel_lengths),
                    "padding": u.padding,
                    "has_batchnorm": u.has_batchnorm,
                }
                for u in self.units
            ],
            "in_channels": self.in_channels,
            "classes": self.classes,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        units = tuple(
            ConvUnitSpec(
                kind=u["kind"],
                in_channels=u["in_channels"],
                out_channels=u["out_channels"],
                kernel_lengths=tuple(u["kernel_lengths"]),
                padding=u.get("padding", "same"),
                has_batchnorm=u.get("has_batchnorm", True),
            )
            for u in d["units"]
        )
        return cls(
            backbone=d["backbone"],
            depth=d["depth"],
            units=units,
            in_channels=d["in_channels"],
            classes=d["classes"],
            seed=d.get("seed", 0),
        )


def fcn_spec(
    depth: int,
    in_channels: int,
    classes: int,
    seed: int = 0,
    filters: Optional[tuple[int, ...]] = None,
) -> NetworkSpec:
    """FCN backbone: ``depth`` conv layers, kernels cycling 8/5/3.

    Default filter plan is 128 for the first layer, 256 for middle layers,
    and 128 for the last (the classic 128/256/128 stack at depth 3).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if filters is None:
        if depth == 1:
            filters = (128,)
        elif depth == 2:
            filters = (128, 256)
        else:
            filters = (128,) + (256,) * (depth - 2) + (128,)
    if len(filters) != depth:
        raise ValueError("filters must match depth")
    units = []
    ch = in_channels
    for i in range(depth):
        units.append(
            ConvUnitSpec(
                kind="conv_layer",
                in_channels=ch,
                out_channels=filters[i],
                kernel_lengths=(FCN_KERNELS[i % 3],),
            )
        )
        ch = filters[i]
    return NetworkSpec("fcn", depth, tuple(units), in_channels, classes, seed)


def resnet_spec(
    depth: int,
    in_channels: int,
    classes: int,
    seed: int = 0,
    filters: tuple[int, int] = (64, 128),
) -> NetworkSpec:
    """ResNet backbone: ``depth`` residual blocks of three convs (8/5/3).

    The first block uses ``filters[0]`` output channels, later blocks
    ``filters[1]``; shortcuts project with a pointwise conv on channel change.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    units = []
    ch = in_channels
    for i in range(depth):
        out = filters[0] if i == 0 else filters[1]
        units.append(
            ConvUnitSpec(
                kind="residual_block",
                in_channels=ch,
                out_channels=out,
                kernel_lengths=RESNET_KERNELS,
            )
        )
        ch = out
    return NetworkSpec("resnet", depth, tuple(units), in_channels, classes, seed)


@dataclass(frozen=True)
class AdapterSpec:
    """Pointwise conv restoring channel width in front of a preserved unit."""

    in_channels: int
    out_channels: int


@dataclass(frozen=True)
class GatePlan:
    """Binary gate per unit plus the channel adapters the gating induces."""

    gates: tuple[int, ...]
    adapters: tuple[Optional[AdapterSpec], ...] = ()

    def __post_init__(self):
        gates = tuple(int(g) for g in self.gates)
        object.__setattr__(self, "gates", gates)
        if any(g not in (0, 1) for g in gates):
            raise ValueError("gates must be 0 or 1")
        adapters = tuple(self.adapters) if self.adapters else (None,) * len(gates)
        object.__setattr__(self, "adapters", adapters)
        if len(adapters) != len(gates):
            raise ValueError("adapters must align with gates")
        for g, a in zip(gates, adapters):
            if a is not None and g == 0:
                raise ValueError("skipped units cannot carry adapters")

    @property
    def depth(self) -> int:
        return len(self.gates)

    @property
    def skipped(self) -> tuple[int, ...]:
        """1-based indices of skipped units."""
        return tuple(i + 1 for i, g in enumerate(self.gates) if g == 0)

    @classmethod
    def all_on(cls, depth: int) -> "GatePlan":
        return cls(gates=(1,) * depth)

    @classmethod
    def for_gates(cls, spec: NetworkSpec, gates) -> "GatePlan":
        """Build a plan from raw gates, synthesizing adapters where needed."""
        gates = tuple(int(g) for g in gates)
        if len(gates) != spec.depth:
            raise ValueError("gates must have one entry per unit")
        adapters: list[Optional[AdapterSpec]] = []
        ch = spec.in_channels
        for g, unit in zip(gates, spec.units):
            if g == 0:
                adapters.append(None)
                continue
            if ch != unit.in_channels:
                adapters.append(AdapterSpec(ch, unit.in_channels))
            else:
                adapters.append(None)
            ch = unit.out_channels
        return cls(gates=gates, adapters=tuple(adapters))

    def to_dict(self) -> dict:
        return {
            "gates": list(self.gates),
            "adapters": [
                None if a is None else {"in_channels": a.in_channels, "out_channels": a.out_channels}
                for a in self.adapters
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GatePlan":
        adapters = tuple(
            None if a is None else AdapterSpec(a["in_channels"], a["out_channels"])
            for a in d.get("adapters", [])
        )
        return cls(gates=tuple(d["gates"]), adapters=adapters or ())


class _FcnCore:
    def __init__(self, prefix: str, unit: ConvUnitSpec, rng):
        self.conv = Conv1d(f"{prefix}.conv", unit.in_channels, unit.out_channels,
                           unit.kernel_lengths[0], rng)
        self.bn = BatchNorm1d(f"{prefix}.bn", unit.out_channels) if unit.has_batchnorm else None

    def forward(self, x, training, update_running):
        y = self.conv.forward(x)
        if self.bn is not None:
            y = self.bn.forward(y, training, update_running)
        return y

    def backward(self, gy):
        if self.bn is not None:
            gy = self.bn.backward(gy)
        return self.conv.backward(gy)

    def layers(self):
        return [l for l in (self.conv, self.bn) if l is not None]


class _ResidualCore:
    """Three conv/bn/relu stages plus a (possibly projected) shortcut.

    The final ReLU lives in the gated wrapper, so the core output is the
    pre-activation sum of the main path and the shortcut.
    """

    def __init__(self, prefix: str, unit: ConvUnitSpec, rng):
        cin, cout = unit.in_channels, unit.out_channels
        ks = unit.kernel_lengths
        bn = unit.has_batchnorm
        self.convs = [
            Conv1d(f"{prefix}.conv1", cin, cout, ks[0], rng),
            Conv1d(f"{prefix}.conv2", cout, cout, ks[1], rng),
            Conv1d(f"{prefix}.conv3", cout, cout, ks[2], rng),
        ]
        self.bns = [BatchNorm1d(f"{prefix}.bn{j + 1}", cout) if bn else None for j in range(3)]
        self.relus = [ReLU(), ReLU()]
        if cin != cout:
            self.shortcut_conv = Conv1d(f"{prefix}.shortcut", cin, cout, 1, rng)
            self.shortcut_bn = BatchNorm1d(f"{prefix}.shortcut_bn", cout) if bn else None
        else:
            self.shortcut_conv = None
            self.shortcut_bn = None

    def forward(self, x, training, update_running):
        h = x
        for j in range(3):
            h = self.convs[j].forward(h)
            if self.bns[j] is not None:
                h = self.bns[j].forward(h, training, update_running)
            if j < 2:
                h = self.relus[j].forward(h)
        if self.shortcut_conv is not None:
            sc = self.shortcut_conv.forward(x)
            if self.shortcut_bn is not None:
                sc = self.shortcut_bn.forward(sc, training, update_running)
        else:
            sc = x
        return h + sc

    def backward(self, gy):
        g = gy
        for j in (2, 1, 0):
            if j < 2:
                g = self.relus[j].backward(g)
            if self.bns[j] is not None:
                g = self.bns[j].backward(g)
            g = self.convs[j].backward(g)
        if self.shortcut_conv is not None:
            gsc = gy
            if self.shortcut_bn is not None:
                gsc = self.shortcut_bn.backward(gsc)
            gsc = self.shortcut_conv.backward(gsc)
            return g + gsc
        return g + gy

    def layers(self):
        out = []
        for j in range(3):
            out.append(self.convs[j])
            if self.bns[j] is not None:
                out.append(self.bns[j])
        if self.shortcut_conv is not None:
            out.append(self.shortcut_conv)
            if self.shortcut_bn is not None:
                out.append(self.shortcut_bn)
        return out


class _GatedUnit:
    def __init__(self, index: int, unit: ConvUnitSpec, gate: int,
                 adapter: Optional[AdapterSpec], rng, adapter_rng):
        self.index = index  # 1-based
        self.spec = unit
        self.gate = gate
        prefix = f"unit{index}"
        self.adapter_conv = None
        self.adapter_relu = None
        self.core = None
        self.out_relu = None
        if gate == 1:
            if adapter is not None:
                if adapter.out_channels != unit.in_channels:
                    raise ValueError(f"{prefix}: adapter does not restore the unit's input width")
                self.adapter_conv = Conv1d(f"{prefix}.adapter", adapter.in_channels,
                                           adapter.out_channels, 1, adapter_rng)
                self.adapter_relu = ReLU()
            if unit.kind == "conv_layer":
                self.core = _FcnCore(prefix, unit, rng)
            else:
                self.core = _ResidualCore(prefix, unit, rng)
            self.out_relu = ReLU()

    def forward(self, x, training, update_running):
        if self.gate == 0:
            return x
        h = x
        if self.adapter_conv is not None:
            h = self.adapter_relu.forward(self.adapter_conv.forward(h))
        elif h.shape[1] != self.spec.in_channels:
            raise ValueError(
                f"unit{self.index}: got {h.shape[1]} channels, expected "
                f"{self.spec.in_channels} and no adapter is present"
            )
        h = self.core.forward(h, training, update_running)
        return self.out_relu.forward(h)

    def backward(self, gy):
        if self.gate == 0:
            return gy
        g = self.out_relu.backward(gy)
        g = self.core.backward(g)
        if self.adapter_conv is not None:
            g = self.adapter_conv.backward(self.adapter_relu.backward(g))
        return g

    def layers(self):
        out = []
        if self.adapter_conv is not None:
            out.append(self.adapter_conv)
        if self.core is not None:
            out.extend(self.core.layers())
        return out


class Network:
    """A gated 1D-CNN classifier built from a spec and a gate plan."""

    def __init__(self, spec: NetworkSpec, plan: Optional[GatePlan] = None):
        self.spec = spec
        self.plan = plan if plan is not None else GatePlan.all_on(spec.depth)
        if self.plan.depth != spec.depth:
            raise ValueError("plan depth does not match spec depth")

        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
        self.units: list[_GatedUnit] = []
        ch = spec.in_channels
        for i, (unit, gate, adapter) in enumerate(
            zip(spec.units, self.plan.gates, self.plan.adapters)
        ):
            if gate == 1:
                if adapter is None and ch != unit.in_channels:
                    raise ValueError(
                        f"unit{i + 1} is preserved but receives {ch} channels "
                        f"(expects {unit.in_channels}) and the plan has no adapter"
                    )
                if adapter is not None and adapter.in_channels != ch:
                    raise ValueError(f"unit{i + 1}: adapter input width does not match the chain")
            adapter_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2, i]))
            self.units.append(_GatedUnit(i + 1, unit, gate, adapter, rng, adapter_rng))
            if gate == 1:
                ch = unit.out_channels
        self.head_channels = ch
        self.gap = GlobalAvgPool()
        self.head = Linear("head.linear", ch, spec.classes, rng)
        self._head_in = None

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray, training: bool = False, capture: bool = False,
                update_running: Optional[bool] = None):
        """Run the network; with ``capture=True`` returns ``(logits, captures)``.

        ``captures[i]`` is unit ``i+1``'s post-activation output (for a skipped
        unit that is just its input, unchanged).
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != self.spec.in_channels:
            raise ValueError(
                f"expected input of shape (batch, {self.spec.in_channels}, length), got {x.shape}"
            )
        if update_running is None:
            update_running = training
        caps = [] if capture else None
        h = x
        for unit in self.units:
            h = unit.forward(h, training, update_running)
            if capture:
                caps.append(h)
        self._head_in = h
        logits = self.head.forward(self.gap.forward(h))
        if capture:
            return logits, caps
        return logits

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        g = self.gap.backward(self.head.backward(dlogits))
        for unit in reversed(self.units):
            g = unit.backward(g)
        return g

    def head_input_gradient(self, dlogits: np.ndarray) -> np.ndarray:
        """Gradient of ``dlogits . logits`` w.r.t. the tensor entering the head."""
        return self.gap.backward(self.head.backward(dlogits))

    @property
    def head_input(self) -> Optional[np.ndarray]:
        """The tensor that entered the head on the most recent forward pass."""
        return self._head_in

    # -- parameters ----------------------------------------------------------

    def param_items(self):
        for unit in self.units:
            for layer in unit.layers():
                yield from layer.param_items()
        yield from self.head.param_items()

    def state_items(self):
        for unit in self.units:
            for layer in unit.layers():
                yield from layer.state_items()

    def zero_grads(self):
        for _, _, grad in self.param_items():
            grad[...] = 0.0

    def get_values(self) -> dict[str, np.ndarray]:
        vals = {name: value.copy() for name, value, _ in self.param_items()}
        vals.update({name: value.copy() for name, value in self.state_items()})
        return vals

    def set_values(self, values: dict[str, np.ndarray], strict: bool = True) -> list[str]:
        """Copy matching arrays in by name; returns the names actually loaded."""
        loaded = []
        targets = {name: value for name, value, _ in self.param_items()}
        targets.update({name: value for name, value in self.state_items()})
        for name, target in targets.items():
            if name in values and values[name].shape == target.shape:
                target[...] = values[name]
                loaded.append(name)
            elif strict:
                raise KeyError(f"missing or mismatched value for {name}")
        return loaded


def count_params_flops(spec: NetworkSpec, plan: Optional[GatePlan] = None, *,
                       length: int) -> tuple[int, int]:
    """Closed-form trainable-parameter and FLOP counts for one instance.

    FLOPs count the multiply-add work of convolutions (``2 * C_in * C_out *
    k * H`` each, adapters and shortcut projections included) and the linear
    head (``2 * in * out``); batch norm, ReLU, and pooling are excluded.
    Skipped units contribute nothing.
    """
    plan = plan if plan is not None else GatePlan.all_on(spec.depth)
    params = 0
    flops = 0

    def conv_cost(cin, cout, k):
        return cin * cout * k + cout, 2 * cin * cout * k * length

    ch = spec.in_channels
    for unit, gate, adapter in zip(spec.units, plan.gates, plan.adapters):
        if gate == 0:
            continue
        if adapter is not None:
            p, f = conv_cost(adapter.in_channels, adapter.out_channels, 1)
            params += p
            flops += f
        cin, cout = unit.in_channels, unit.out_channels
        if unit.kind == "conv_layer":
            p, f = conv_cost(cin, cout, unit.kernel_lengths[0])
            params += p
            flops += f
            if unit.has_batchnorm:
                params += 2 * cout
        else:
            stage_in = cin
            for k in unit.kernel_lengths:
                p, f = conv_cost(stage_in, cout, k)
                params += p
                flops += f
                if unit.has_batchnorm:
                    params += 2 * cout
                stage_in = cout
            if cin != cout:
                p, f = conv_cost(cin, cout, 1)
                params += p
                flops += f
                if unit.has_batchnorm:
                    params += 2 * cout
        ch = cout
    params += ch * spec.classes + spec.classes
    flops += 2 * ch * spec.classes
    return params, flops
