"""Quantitative information flow analysis of third-party cookies and the Topics API."""

from .core import (
    Channel,
    Distribution,
    Hyper,
    InvalidChannelError,
    InvalidDistributionError,
    JointMatrix,
    VulnerabilityReport,
    additive_leakage,
    bayes_vulnerability,
    convex_combination,
    hyper,
    joint,
    multiplicative_leakage,
    posterior_bayes_vulnerability,
    posterior_bayes_vulnerability_deterministic_uniform,
    uniform_prior,
    validate_channel,
    vulnerability_report,
)
from .models import (
    ModelParams,
    Taxonomy,
    apply_taxonomy_noise,
    build_cookies_channel,
    build_topics_channel,
    cookies_closed_form_leakage,
    cookies_closed_form_vulnerability,
    leakage_sweep,
    topics_closed_form_leakage,
    topics_closed_form_vulnerability,
)

__version__ = "0.1.0"
