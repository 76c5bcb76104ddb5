#include "etop/mma.hpp"

#include <cmath>

namespace etop {

namespace {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Interior-point solve of the separable MMA subproblem
//   min sum(p0/(upp-x) + q0/(x-low)) + z + sum(c y + 0.5 y^2)
//   s.t. P(1/(upp-x)) + Q(1/(x-low)) - y <= b, alfa <= x <= beta, y,z >= 0.
struct Subproblem {
    const VectorXd &p0, &q0, &alfa, &beta, &low, &upp, &b, &c;
    const MatrixXd &P, &Q;

    VectorXd solve(double epsimin) const {
        const int n = static_cast<int>(p0.size());
        const int m = static_cast<int>(b.size());

        VectorXd x = 0.5 * (alfa + beta);
        VectorXd y = VectorXd::Ones(m);
        double z = 1.0;
        VectorXd lam = VectorXd::Ones(m);
        VectorXd xsi = (1.0 / (x - alfa).array()).max(1.0).matrix();
        VectorXd eta = (1.0 / (beta - x).array()).max(1.0).matrix();
        VectorXd mu = (0.5 * c.array()).max(1.0).matrix();
        double zet = 1.0;
        VectorXd s = VectorXd::Ones(m);

        // KKT residual blocks with a0 = 1, a = 0, d = 1.
        const auto residual = [&](const VectorXd& x_, const VectorXd& y_, double z_,
                                  const VectorXd& lam_, const VectorXd& xsi_,
                                  const VectorXd& eta_, const VectorXd& mu_, double zet_,
                                  const VectorXd& s_, double epsi) {
            const ArrayXd ux1 = (upp - x_).array(), xl1 = (x_ - low).array();
            const VectorXd plam = p0 + P.transpose() * lam_;
            const VectorXd qlam = q0 + Q.transpose() * lam_;
            const VectorXd gvec = P * ux1.inverse().matrix() + Q * xl1.inverse().matrix();

            VectorXd res(3 * n + 4 * m + 2);
            int at = 0;
            res.segment(at, n) = (plam.array() / ux1.square() - qlam.array() / xl1.square() -
                                  xsi_.array() + eta_.array())
                                     .matrix();
            at += n;
            res.segment(at, m) = c + y_ - mu_ - lam_;
            at += m;
            res[at++] = 1.0 - zet_;
            res.segment(at, m) = gvec - y_ + s_ - b;
            at += m;
            res.segment(at, n) = (xsi_.array() * (x_ - alfa).array() - epsi).matrix();
            at += n;
            res.segment(at, n) = (eta_.array() * (beta - x_).array() - epsi).matrix();
            at += n;
            res.segment(at, m) = (mu_.array() * y_.array() - epsi).matrix();
            at += m;
            res[at++] = zet_ * z_ - epsi;
            res.segment(at, m) = (lam_.array() * s_.array() - epsi).matrix();
            return res;
        };

        double epsi = 1.0;
        while (epsi > epsimin) {
            VectorXd res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi);
            double resnorm = res.norm();
            double resmax = res.cwiseAbs().maxCoeff();

            for (int it = 0; it < 200 && resmax > 0.9 * epsi; ++it) {
                const ArrayXd ux1 = (upp - x).array(), xl1 = (x - low).array();
                const ArrayXd ux2 = ux1.square(), xl2 = xl1.square();
                const ArrayXd ux3 = ux2 * ux1, xl3 = xl2 * xl1;
                const VectorXd plam = p0 + P.transpose() * lam;
                const VectorXd qlam = q0 + Q.transpose() * lam;
                const VectorXd gvec = P * ux1.inverse().matrix() + Q * xl1.inverse().matrix();

                // GG(i, j) = d g_i / d x_j
                MatrixXd GG(m, n);
                for (int i = 0; i < m; ++i)
                    GG.row(i) = (P.row(i).transpose().array() / ux2 -
                                 Q.row(i).transpose().array() / xl2)
                                    .matrix()
                                    .transpose();

                const ArrayXd dpsidx = plam.array() / ux2 - qlam.array() / xl2;
                const VectorXd delx =
                    (dpsidx - epsi / (x - alfa).array() + epsi / (beta - x).array()).matrix();
                const VectorXd dely = c + y - lam - (epsi / y.array()).matrix();
                const double delz = 1.0 - epsi / z;
                const VectorXd dellam = gvec - y - b + (epsi / lam.array()).matrix();
                const ArrayXd diagx = 2.0 * (plam.array() / ux3 + qlam.array() / xl3) +
                                      xsi.array() / (x - alfa).array() +
                                      eta.array() / (beta - x).array();
                const ArrayXd diagy = 1.0 + mu.array() / y.array();
                const ArrayXd diaglamyi = s.array() / lam.array() + diagy.inverse();

                // Condensed (m+1) x (m+1) system in (dlam, dz).
                VectorXd blam = dellam + (dely.array() / diagy).matrix() -
                                GG * (delx.array() / diagx).matrix();
                MatrixXd Alam = (diaglamyi.matrix()).asDiagonal();
                Alam += GG * (diagx.inverse().matrix()).asDiagonal() * GG.transpose();
                MatrixXd AA(m + 1, m + 1);
                AA.setZero();
                AA.topLeftCorner(m, m) = Alam;
                AA(m, m) = -zet / z;
                VectorXd bb(m + 1);
                bb.head(m) = blam;
                bb[m] = delz;
                const VectorXd solut = AA.fullPivLu().solve(bb);
                const VectorXd dlam = solut.head(m);
                const double dz = solut[m];

                const VectorXd dx =
                    (-(delx.array() + (GG.transpose() * dlam).array()) / diagx).matrix();
                const VectorXd dy = ((dlam.array() - dely.array()) / diagy).matrix();
                const VectorXd dxsi =
                    ((epsi - xsi.array() * dx.array()) / (x - alfa).array() - xsi.array())
                        .matrix();
                const VectorXd deta =
                    ((epsi + eta.array() * dx.array()) / (beta - x).array() - eta.array())
                        .matrix();
                const VectorXd dmu =
                    ((epsi - mu.array() * dy.array()) / y.array() - mu.array()).matrix();
                const double dzet = (epsi - zet * dz) / z - zet;
                const VectorXd ds =
                    ((epsi - s.array() * dlam.array()) / lam.array() - s.array()).matrix();

                // Fraction-to-boundary step limit.
                double stminv = 1.0;
                auto limit = [&stminv](const ArrayXd& v, const ArrayXd& dv) {
                    for (int i = 0; i < v.size(); ++i)
                        stminv = std::max(stminv, -1.01 * dv[i] / v[i]);
                };
                limit(y.array(), dy.array());
                stminv = std::max(stminv, -1.01 * dz / z);
                limit(lam.array(), dlam.array());
                limit(xsi.array(), dxsi.array());
                limit(eta.array(), deta.array());
                limit(mu.array(), dmu.array());
                stminv = std::max(stminv, -1.01 * dzet / zet);
                limit(s.array(), ds.array());
                limit((x - alfa).array(), dx.array());
                limit((beta - x).array(), (-dx).array());
                double steg = 1.0 / stminv;

                const VectorXd xo = x, yo = y, lamo = lam, xsio = xsi, etao = eta, muo = mu,
                               so = s;
                const double zo = z, zeto = zet;
                double newnorm = resnorm;
                for (int back = 0; back < 60; ++back) {
                    x = xo + steg * dx;
                    y = yo + steg * dy;
                    z = zo + steg * dz;
                    lam = lamo + steg * dlam;
                    xsi = xsio + steg * dxsi;
                    eta = etao + steg * deta;
                    mu = muo + steg * dmu;
                    zet = zeto + steg * dzet;
                    s = so + steg * ds;
                    res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi);
                    newnorm = res.norm();
                    if (newnorm < resnorm) break;
                    steg *= 0.5;
                }
                resnorm = newnorm;
                resmax = res.cwiseAbs().maxCoeff();
            }
            epsi *= 0.1;
        }
        return x;
    }
};

}  // namespace

MmaSolver::MmaSolver(VectorXd lower, VectorXd upper, int num_constraints, MmaOptions options)
    : options_(options), lower_(std::move(lower)), upper_(std::move(upper)),
      mcon_(num_constraints) {
    if (lower_.size() != upper_.size()) throw DomainError("MMA bounds must have equal length");
    for (int i = 0; i < lower_.size(); ++i)
        if (!(lower_[i] < upper_[i])) throw DomainError("MMA bounds must satisfy lower < upper");
    if (mcon_ < 0) throw DomainError("negative constraint count");
}

VectorXd MmaSolver::step(const VectorXd& x, const VectorXd& df0dx, const VectorXd& fval,
                         const MatrixXd& dfdx) {
    const int n = static_cast<int>(x.size());
    if (x.size() != lower_.size() || df0dx.size() != n)
        throw DomainError("MMA variable/gradient size mismatch");
    if (fval.size() != mcon_ || dfdx.rows() != mcon_ || (mcon_ > 0 && dfdx.cols() != n))
        throw DomainError("MMA constraint value/gradient size mismatch");

    // The subproblem machinery needs at least one constraint row; pad with an
    // always-satisfied dummy when the caller has none.
    const int m = std::max(mcon_, 1);
    VectorXd f(m);
    MatrixXd df(m, n);
    if (mcon_ == 0) {
        f.setConstant(-1.0);
        df.setZero();
    } else {
        f = fval;
        df = dfdx;
    }

    const ArrayXd range = (upper_ - lower_).array();
    ++iter_;
    if (iter_ <= 2) {
        low_ = x - options_.asy_init * range.matrix();
        upp_ = x + options_.asy_init * range.matrix();
    } else {
        // Expand asymptotes where the variable moves monotonically, shrink
        // where it oscillates.
        for (int i = 0; i < n; ++i) {
            const double trend = (x[i] - xold1_[i]) * (xold1_[i] - xold2_[i]);
            double factor = 1.0;
            if (trend > 0) factor = options_.asy_increase;
            if (trend < 0) factor = options_.asy_decrease;
            low_[i] = x[i] - factor * (xold1_[i] - low_[i]);
            upp_[i] = x[i] + factor * (upp_[i] - xold1_[i]);
        }
        low_ = low_.cwiseMax(x - options_.asy_max_ratio * range.matrix())
                   .cwiseMin(x - options_.asy_min_ratio * range.matrix());
        upp_ = upp_.cwiseMin(x + options_.asy_max_ratio * range.matrix())
                   .cwiseMax(x + options_.asy_min_ratio * range.matrix());
    }
    xold2_ = (iter_ == 1) ? x : xold1_;
    xold1_ = x;

    const VectorXd alfa = lower_.cwiseMax(low_ + options_.albefa * (x - low_))
                              .cwiseMax(x - options_.move_limit * range.matrix());
    const VectorXd beta = upper_.cwiseMin(upp_ - options_.albefa * (upp_ - x))
                              .cwiseMin(x + options_.move_limit * range.matrix());

    const ArrayXd ux1 = (upp_ - x).array(), xl1 = (x - low_).array();
    const ArrayXd xmami = range.max(1e-5);

    const ArrayXd df0p = df0dx.array().max(0.0), df0m = (-df0dx.array()).max(0.0);
    const ArrayXd pq0 = 0.001 * (df0p + df0m) + options_.raa0 / xmami;
    const VectorXd p0 = ((df0p + pq0) * ux1.square()).matrix();
    const VectorXd q0 = ((df0m + pq0) * xl1.square()).matrix();

    MatrixXd P(m, n), Q(m, n);
    for (int i = 0; i < m; ++i) {
        const ArrayXd gp = df.row(i).transpose().array().max(0.0);
        const ArrayXd gm = (-df.row(i).transpose().array()).max(0.0);
        const ArrayXd pq = 0.001 * (gp + gm) + options_.raa0 / xmami;
        P.row(i) = ((gp + pq) * ux1.square()).matrix().transpose();
        Q.row(i) = ((gm + pq) * xl1.square()).matrix().transpose();
    }
    const VectorXd b =
        P * ux1.inverse().matrix() + Q * xl1.inverse().matrix() - f;
    const VectorXd c = VectorXd::Constant(m, options_.constraint_penalty);

    Subproblem sub{p0, q0, alfa, beta, low_, upp_, b, c, P, Q};
    return sub.solve(options_.epsimin);
}

}  // namespace etop
