"""Tolerances and sample counts used across the package.

Every knob lives here so that ``kproj verify --show-config`` can print the
complete set.  ``override`` returns a copy; the module-level dict is never
mutated by library code.
"""

DEFAULTS = {
    # projective points
    "point_equality": 1e-10,
    "pivot_relative": 1e-12,
    "vanish": 1e-10,
    # domains
    "boundary_band": 1e-9,
    "tangent_gradient_min": 1e-10,
    "certify_tol": 1e-9,
    "certify_samples": 10_000,
    "boundary_directions": 64,
    "automorphism_samples": 1000,
    # spectra
    "pairing_relative": 1e-6,
    "sigma_tie": 1e-9,
    "kak_projection": 1e-8,
    "pivot_min": 1e-12,
    # dynamics
    "power_tol": 1e-12,
    "power_maxit": 10_000,
    "rank_one_tol": 1e-10,
    "rank_one_max_squarings": 200,
    "local_probe_radius": 0.1,
    "extension_agreement": 1e-8,
    "hessian_step": 1e-2,
    # metric
    "log_floor": 1e-300,
    "ascent_gtol": 1e-13,
    "ascent_converged": 1e-6,
    # moebius
    "sphere_fit": 1e-8,
}


def override(**kwargs):
    unknown = set(kwargs) - set(DEFAULTS)
    if unknown:
        raise KeyError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update(kwargs)
    return cfg
