"""Weighted Hodge theory laboratory.

Exterior calculus for the weighted measure ``exp(-f) dv``: pointwise operators
on closed-form fields, integral identity checks by quadrature, weighted Whitney
forms on simplicial meshes, and Hodge/Steklov spectra.
"""

CONVENTIONS = (
    "conventions/v1: Delta u = -sum u_AA; Delta_f u = Delta u + <grad f, grad u>; "
    "delta_f = delta + i_grad f; N inner unit normal; S(X) = -nabla_X N; "
    "H = tr S / n; H_f = H + f_N / n; f_N = <grad f, N>; "
    "|w|^2 = sum over increasing multi-indices"
)

__version__ = "0.1.0"
