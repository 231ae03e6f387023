"""Unit conversions. Everything internal is in atomic units."""

AU_TIME_FS = 2.4188843e-2
"""One atomic unit of time in femtoseconds."""


def fs_to_au(t_fs):
    return t_fs / AU_TIME_FS


def au_to_fs(t_au):
    return t_au * AU_TIME_FS


def rate_from_inverse_fs(inverse_fs):
    """Convert a lifetime given in fs (e.g. ``gamma_inv = 1630``) to a rate in a.u."""
    return 1.0 / fs_to_au(inverse_fs)
