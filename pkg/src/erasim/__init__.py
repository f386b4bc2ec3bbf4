"""Simulation of measure-then-erase realizations of von Neumann couplings.

Modules:

* ``qstate`` -- dense states, operators, tensor products and partial traces
* ``observable`` -- spectral decompositions and product observables
* ``meter`` -- Gaussian and discrete pointers, couplings, joint states
* ``measurement`` -- Kraus/Lüders channels, ABL, weak and modular values
* ``erasure`` -- the single-site and two-party erasure protocols
* ``channels`` -- entangling, entanglement-breaking and signalling tests
* ``ccu`` -- the ancilla-mediated controlled-controlled unitary
* ``cli`` -- the ``erasim`` experiment runner
"""

from .qstate import DensityState, Operator, PureState, ket, operator, state, tensor
from .observable import ProductObservable, SpectralDecomposition, spectral_decompose
from .meter import DiscreteMeter, GaussianMeter, JointState, couple, pointer_stats
from .measurement import (
    KrausChannel,
    PrePostSelection,
    SingularPrePostError,
    abl,
    lueders,
    modular_value,
    weak_value,
)
from .erasure import nonlocal_product_measure, pauli_product_measure, pi11_circuit, prop1_measure
from .channels import BipartiteChannel, entanglement_breaking_scan, signalling_test
from .ccu import build_ccu

__version__ = "0.1.0"

__all__ = [
    "BipartiteChannel",
    "DensityState",
    "DiscreteMeter",
    "GaussianMeter",
    "JointState",
    "KrausChannel",
    "Operator",
    "PrePostSelection",
    "ProductObservable",
    "PureState",
    "SingularPrePostError",
    "SpectralDecomposition",
    "abl",
    "build_ccu",
    "couple",
    "entanglement_breaking_scan",
    "ket",
    "lueders",
    "modular_value",
    "nonlocal_product_measure",
    "operator",
    "pauli_product_measure",
    "pi11_circuit",
    "pointer_stats",
    "prop1_measure",
    "signalling_test",
    "spectral_decompose",
    "state",
    "tensor",
    "weak_value",
]
