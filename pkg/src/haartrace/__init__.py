"""haartrace: exact corner-trace statistics of Haar unitary/orthogonal matrices.

Exact side: set-partition combinatorics, Weingarten tables at fixed matrix
size by rational Gram inversion, and closed trace-cumulant formulas with an
independent moment-route oracle.  Monte Carlo side: reproducible Haar
sampling, the centered corner-mass process, k-statistic and covariance
estimators, and spectral comparison against the limiting law.
"""

__version__ = "0.1.0"

from .combinatorics import (
    CycleType,
    Pairing,
    Permutation,
    SetPartition,
    cycle_partition,
    enumerate_pairings,
    enumerate_partitions,
    join,
    loop_count,
    meet,
    mobius,
    one_partition,
    refines,
    zero_partition,
)
from .cumulants import (
    CumulantRequest,
    ProjectorFamily,
    classical_cumulant,
    covariance_closed,
    cumulant_via_moments,
    fourth_central_moment,
    limit_covariance,
    mixed_trace_moment,
    projector_trace,
    relative_cumulant_orthogonal,
    relative_cumulant_unitary,
    trace_cumulant,
    trace_cumulant_orthogonal,
    trace_cumulant_unitary,
    variance_closed,
    variance_closed_orthogonal,
)
from .empirics import (
    BridgeSample,
    IncrementFit,
    KStats,
    KestenMcKay,
    ProcessSample,
    ReplicaStats,
    SpectralHistogram,
    TraceField,
    block_increment,
    bridge_reference,
    covariance_mc,
    increment_fourth_moment_fit,
    kesten_mckay,
    kstat_estimators,
    process_value,
    sample_process_values,
    spectral_compare,
    trace_field,
    uniform_lln_deviation,
)
from .errors import (
    DimensionError,
    InsufficientReplicasError,
    OrderViolationError,
    SingularGramError,
    SizeLimitError,
)
from .sampling import (
    SeedSpec,
    haar_batch,
    haar_orthogonal,
    haar_sample,
    haar_unitary,
    orthonormality_residual,
)
from .weingarten import (
    BigRational,
    RationalMatrix,
    SignVector,
    WeingartenTable,
    eta,
    gram_orthogonal,
    gram_unitary,
    hyperoctahedral_group,
    joint_moment_orthogonal,
    joint_moment_unitary,
    orthogonal_table,
    particular_permutations,
    sigma_of,
    t_of_perm,
    tau_of_signs,
    unitary_table,
    weingarten_orthogonal,
    weingarten_unitary,
)
