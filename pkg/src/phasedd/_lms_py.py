"""Pure-Python LMS inner loop, used when the compiled core is unavailable."""
import numpy as np

from .txdsp import decide


def lms_run(x, d, w, mu, n_train, track, start, stride, n_out):
    """Run the multi-branch LMS in place on ``w``; returns (y, err)."""
    n = x.shape[1]
    taps = w.shape[1]
    offs = taps // 2 - np.arange(taps)
    y = np.zeros(n_out, dtype=complex)
    err = np.zeros(n_out, dtype=complex)
    for k in range(n_out):
        win = x[:, (start + k * stride + offs) % n]
        acc = np.sum(np.conj(w) * win)
        y[k] = acc
        e = d[k] - acc if k < n_train else decide(acc) - acc
        err[k] = e
        if k >= n_train and not track:
            continue
        w += mu * win * np.conj(e)
    return y, err
