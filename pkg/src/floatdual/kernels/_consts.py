"""Body kinds and Gauss-Kronrod 7/15 constants shared by the kernels."""

import math

import numpy as np

BP = 0
ELLIPSE = 1
SPLINE = 2
POLYGON = 3

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

# Newton steps in log-depth below this end the iteration: rounding in the
# integrands, not the iteration, limits the residual past that point.
STEP_TOL = 1e-9

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
