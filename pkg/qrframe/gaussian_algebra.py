'''closed-form integrals of products of multivariate gaussian amplitudes.

A branch amplitude is

    g(x) = c det(2 pi S)^(-1/4) exp(-1/4 (x-a)^T S^-1 (x-a) + i k^T (x-a) / hbar)

so |g|^2 has mean a and covariance S. Every quantity used by the package
(overlaps, partial traces, purities, phase-space moments) is an integral of
a product of such factors, possibly evaluated at shifted arguments. These
are handled uniformly through `GaussianExponent`, the exponent
-1/2 w^T Q w + beta^T w + gamma of a (complex) gaussian in the variables w.
'''
import logging

import numpy as np

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


class GaussianExponent:
    '''exp(-1/2 w^T Q w + beta^T w + gamma) with real symmetric Q and complex beta, gamma.
    '''
    def __init__(self, Q, beta, gamma=0.0):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.beta = np.atleast_1d(np.asarray(beta, dtype=complex))
        self.gamma = complex(gamma)

    @property
    def dim(self):
        return self.beta.shape[0]

    def __add__(self, other):
        if other.dim != self.dim:
            raise ValueError(f'cannot add exponents over {self.dim} and {other.dim} variables')
        return GaussianExponent(self.Q + other.Q, self.beta + other.beta, self.gamma + other.gamma)

    def embed(self, E, f=None):
        '''substitute x = E w + f, returning the exponent as a function of w.
        '''
        E = np.asarray(E, dtype=float)
        if f is None:
            f = np.zeros(self.dim)
        f = np.asarray(f, dtype=float)
        Qf = self.Q @ f
        Q = E.T @ self.Q @ E
        beta = E.T @ (self.beta - Qf)
        gamma = self.gamma + self.beta @ f - 0.5 * f @ Qf
        return GaussianExponent(Q, beta, gamma)

    def marginalize(self, idx):
        '''integrate out the variables listed in idx; the rest keep their order.
        '''
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        keep = np.setdiff1d(np.arange(self.dim), idx)
        Qtt = self.Q[np.ix_(idx, idx)]
        Qkt = self.Q[np.ix_(keep, idx)]
        Qkk = self.Q[np.ix_(keep, keep)]
        bt = self.beta[idx]
        sign, logdet = np.linalg.slogdet(Qtt)
        if sign <= 0:
            raise np.linalg.LinAlgError('gaussian integral over a non positive-definite block')
        Qtt_inv_bt = np.linalg.solve(Qtt, bt)
        Qtt_inv_Qtk = np.linalg.solve(Qtt, Qkt.T)
        Q = Qkk - Qkt @ Qtt_inv_Qtk
        beta = self.beta[keep] - Qkt @ Qtt_inv_bt
        gamma = self.gamma + 0.5 * bt @ Qtt_inv_bt + 0.5 * len(idx) * LOG_2PI - 0.5 * logdet
        return GaussianExponent(0.5 * (Q + Q.T), beta, gamma)

    def log_integral(self):
        return self.marginalize(np.arange(self.dim)).gamma

    def integral(self):
        return np.exp(self.log_integral())

    def moments(self):
        '''normalized first and second moments of the (complex) measure.
        '''
        cov = np.linalg.inv(self.Q)
        mean = cov @ self.beta
        return mean, cov + np.outer(mean, mean)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        quad = np.einsum('...i,ij,...j->...', points, self.Q, points)
        return np.exp(-0.5 * quad + points @ self.beta + self.gamma)


def branch_log_norm(covariance):
    sign, logdet = np.linalg.slogdet(2.0 * np.pi * np.asarray(covariance))
    if sign <= 0:
        raise np.linalg.LinAlgError('branch covariance should be positive definite')
    return -0.25 * logdet


def branch_exponent(branch, hbar, conjugate=False):
    '''exponent of one branch amplitude (its complex conjugate if conjugate=True).
    '''
    a = np.asarray(branch.centers, dtype=float)
    k = np.asarray(branch.momentum_offsets, dtype=float)
    P = np.linalg.inv(branch.covariance)
    sign = -1.0 if conjugate else 1.0
    c = np.conj(branch.coefficient) if conjugate else branch.coefficient
    Pa = P @ a
    beta = 0.5 * Pa + sign * 1j * k / hbar
    gamma = np.log(complex(c)) + branch_log_norm(branch.covariance) - 0.25 * a @ Pa - sign * 1j * (k @ a) / hbar
    return GaussianExponent(0.5 * P, beta, gamma)


def selector(n_vars, columns):
    '''matrix E with x = E w picking x_i = w[columns[i]].
    '''
    E = np.zeros((len(columns), n_vars))
    E[np.arange(len(columns)), columns] = 1.0
    return E


def common_origin(branches):
    return np.mean([np.asarray(b.centers, dtype=float) for b in branches], axis=0)


def active(branches):
    return [b for b in branches if b.coefficient != 0]


def overlap(bra_branches, ket_branches, hbar):
    '''sum over branch pairs of conj(c_a) c_b <g_a|g_b>.
    '''
    total = 0.0 + 0.0j
    for a in active(bra_branches):
        bra = branch_exponent(a, hbar, conjugate=True)
        for b in active(ket_branches):
            total += (bra + branch_exponent(b, hbar)).integral()
    return total


def partial_trace_exponents(branches, keep, hbar):
    '''rho(k, k') = sum over returned exponents evaluated at w = (k, k').

    The traced coordinates are integrated in closed form.
    '''
    n = len(branches[0].centers)
    keep = list(keep)
    traced = [i for i in range(n) if i not in keep]
    nk, nt = len(keep), len(traced)
    # variables: k (nk), k' (nk), t (nt)
    n_vars = 2 * nk + nt
    ket_cols = np.empty(n, dtype=int)
    bra_cols = np.empty(n, dtype=int)
    ket_cols[keep] = np.arange(nk)
    bra_cols[keep] = nk + np.arange(nk)
    ket_cols[traced] = 2 * nk + np.arange(nt)
    bra_cols[traced] = 2 * nk + np.arange(nt)
    E_ket = selector(n_vars, ket_cols)
    E_bra = selector(n_vars, bra_cols)
    t_idx = np.arange(2 * nk, n_vars)
    terms = []
    for a in active(branches):
        ket = branch_exponent(a, hbar).embed(E_ket)
        for b in active(branches):
            bra = branch_exponent(b, hbar, conjugate=True).embed(E_bra)
            pair = ket + bra
            terms.append(pair.marginalize(t_idx) if nt else pair)
    return terms


def partial_trace_purity(branches, keep, hbar):
    '''Tr rho_K^2 for rho_K = Tr_rest |psi><psi|, as one four-factor gaussian integral per branch quadruple.
    '''
    n = len(branches[0].centers)
    keep = list(keep)
    traced = [i for i in range(n) if i not in keep]
    nk, nt = len(keep), len(traced)
    # variables: k, k', t, t'
    n_vars = 2 * nk + 2 * nt
    k0, k1 = np.arange(nk), nk + np.arange(nk)
    t0, t1 = 2 * nk + np.arange(nt), 2 * nk + nt + np.arange(nt)

    def cols(kc, tc):
        c = np.empty(n, dtype=int)
        c[keep] = kc
        c[traced] = tc
        return selector(n_vars, c)

    E_a, E_b, E_c, E_d = cols(k0, t0), cols(k1, t0), cols(k1, t1), cols(k0, t1)
    kets = [branch_exponent(b, hbar) for b in active(branches)]
    bras = [branch_exponent(b, hbar, conjugate=True) for b in active(branches)]
    total = 0.0 + 0.0j
    for a in kets:
        ea = a.embed(E_a)
        for b in bras:
            eab = ea + b.embed(E_b)
            for c in kets:
                eabc = eab + c.embed(E_c)
                for d in bras:
                    total += (eabc + d.embed(E_d)).integral()
    return float(total.real)


def phase_space_moments(branches, hbar):
    '''means and symmetrized covariance of (x_1..x_n, p_1..p_n) for a normalized superposition.
    '''
    n = len(branches[0].centers)
    ex = np.zeros(n, dtype=complex)
    ep = np.zeros(n, dtype=complex)
    exx = np.zeros((n, n), dtype=complex)
    epp = np.zeros((n, n), dtype=complex)
    exp_ = np.zeros((n, n), dtype=complex)
    half = 0.5j * hbar
    bras = [(b, branch_exponent(b, hbar, conjugate=True)) for b in active(branches)]
    kets = [(b, branch_exponent(b, hbar)) for b in active(branches)]
    for a, bra in bras:
        Pa = np.linalg.inv(a.covariance)
        wa = np.asarray(a.momentum_offsets) - half * Pa @ np.asarray(a.centers)
        for b, ket in kets:
            Pb = np.linalg.inv(b.covariance)
            wb = np.asarray(b.momentum_offsets) - half * Pb @ np.asarray(b.centers)
            pair = bra + ket
            weight = pair.integral()
            m, S = pair.moments()
            Pbm = Pb @ m
            Pam = Pa @ m
            ex += weight * m
            exx += weight * S
            ep += weight * (wb + half * Pbm)
            exp_ += weight * (np.outer(m, wb) + half * S @ Pb)
            epp += weight * (np.outer(np.conj(wa), wb) + half * np.outer(np.conj(wa), Pbm)
                             - half * np.outer(Pam, wb) + (hbar ** 2 / 4.0) * Pa @ S @ Pb)
    mean = np.concatenate([ex.real, ep.real])
    second = np.zeros((2 * n, 2 * n))
    second[:n, :n] = exx.real
    second[n:, n:] = epp.real
    second[:n, n:] = exp_.real
    second[n:, :n] = exp_.real.T
    second = 0.5 * (second + second.T)
    return mean, second - np.outer(mean, mean)
