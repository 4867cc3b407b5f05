"""Maximum H-eigenvalues of structured symmetric tensors.

The package computes maximum H-eigenvalues of even-order symmetric tensors
whose polynomials split into small blocks with single-index overlaps, by
compiling sums-of-squares membership into block-diagonal semidefinite
programs solved by an in-tree interior-point method.  The same machinery
covers hypergraph Laplacian spectra (hyper-stars, hyper-paths, hyper-trees)
and copositivity certification of extended Z-tensors of any order.
"""

from .baselines import AscentResult, NqzResult, hyper_star_lambda, nqz, projected_ascent
from .copositivity import (
    CopositivityVerdict,
    ExtendedZStructure,
    detect_extended_z,
    gen_random_extended_z,
    is_copositive,
    lift_even,
)
from .errors import WTensorError
from .hypergraph import (
    UniformHypergraph,
    adjacency_tensor,
    gen_hyper_path,
    gen_hyper_star,
    gen_hyper_tree,
    laplacian,
    laplacian_w_decomposition,
    load_edge_list,
    save_edge_list,
    signless_laplacian,
)
from .instances import example31_decomposition, example31_tensor, random_w_tensor
from .sdp import SdpBuilder, SdpProblem, SdpSolution, dump_problem, load_problem
from .sdp import solve as solve_sdp
from .sos import (
    EigResult,
    MonomialBasis,
    SosCertificate,
    amgm_nonnegative,
    amgm_threshold,
    block_closed_form,
    certificate_to_json,
    compile_block,
    compile_full,
    max_h_eigenvalue,
    monomial_basis,
    verify_certificate,
)
from .tensor import (
    SymmetricTensor,
    canonicalize,
    load_tensor,
    multinomial,
    save_tensor,
    tensor_from_json,
    tensor_to_json,
)
from .wstructure import (
    BlockKind,
    WDecomposition,
    detect,
    reallocate_diagonal,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AscentResult", "NqzResult", "hyper_star_lambda", "nqz", "projected_ascent",
    "CopositivityVerdict", "ExtendedZStructure", "detect_extended_z",
    "gen_random_extended_z", "is_copositive", "lift_even",
    "WTensorError",
    "UniformHypergraph", "adjacency_tensor", "gen_hyper_path", "gen_hyper_star",
    "gen_hyper_tree", "laplacian", "laplacian_w_decomposition", "load_edge_list",
    "save_edge_list", "signless_laplacian",
    "example31_decomposition", "example31_tensor", "random_w_tensor",
    "SdpBuilder", "SdpProblem", "SdpSolution", "dump_problem", "load_problem",
    "solve_sdp",
    "EigResult", "MonomialBasis", "SosCertificate", "amgm_nonnegative",
    "amgm_threshold", "block_closed_form", "certificate_to_json",
    "compile_block", "compile_full", "max_h_eigenvalue", "monomial_basis",
    "verify_certificate",
    "SymmetricTensor", "canonicalize", "load_tensor", "multinomial",
    "save_tensor", "tensor_from_json", "tensor_to_json",
    "BlockKind", "WDecomposition", "detect", "reallocate_diagonal", "validate",
]
