"""Testing samplers over {0,1}^n with DUAL access to the target and PCOND+SAMP access to the sampler."""

from .bucketing import BucketingContext, BucketSampler, bucket_index, compute_k, sample_bucket
from .distributions import (
    Assignment,
    ExplicitDistribution,
    LogLinearDistribution,
    ProductDistribution,
    UnionOfProducts,
    from_descriptor,
    mult_distance,
    to_descriptor,
    tv_distance,
)
from .oracles import BudgetExceeded, DualOracle, FaultModel, Ledger, SamplerOracle, make_faulty_sampler
from .tester import TestParams, TestReport, Verdict, barbarik3

__all__ = [
    "Assignment", "BucketSampler", "BucketingContext", "BudgetExceeded", "DualOracle",
    "ExplicitDistribution", "FaultModel", "Ledger", "LogLinearDistribution", "ProductDistribution",
    "SamplerOracle", "TestParams", "TestReport", "UnionOfProducts", "Verdict", "barbarik3",
    "bucket_index", "compute_k", "from_descriptor", "make_faulty_sampler", "mult_distance",
    "sample_bucket", "to_descriptor", "tv_distance",
]
