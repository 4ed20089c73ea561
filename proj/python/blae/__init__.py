"""Bi-Lipschitz autoencoder experiments: C++ core with python bindings."""

from ._blae import (
    Mlp,
    PointCloud,
    __version__,
    arclength_of_theta,
    bilip_loss,
    delta_min,
    generate_swiss_roll,
    generate_vshape,
    geodesic_distances,
    kl_sigma,
    knn_recall,
    recon_loss,
    singular_pair,
    spearman,
    theta_of_arclength,
    train,
)

__all__ = [
    "Mlp",
    "PointCloud",
    "__version__",
    "arclength_of_theta",
    "bilip_loss",
    "delta_min",
    "generate_swiss_roll",
    "generate_vshape",
    "geodesic_distances",
    "kl_sigma",
    "knn_recall",
    "recon_loss",
    "singular_pair",
    "spearman",
    "theta_of_arclength",
    "train",
]
