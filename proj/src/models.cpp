#include "mwsub/models.hpp"

#include <cmath>

#include "mwsub/errors.hpp"

namespace mwsub {

namespace {

std::vector<std::size_t> field_indices(const TwoWayPanel& panel,
                                       const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& name : names) idx.push_back(panel.field_index(name));
    return idx;
}

double fd_step(double theta_l) { return 1e-6 * std::max(1.0, std::fabs(theta_l)); }

// log(1 + exp(t)) without overflow
double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

Eigen::VectorXd MomentModel::eval(TwoWayPanel::RecordView w,
                                  const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g(m);
    evaluate(w, theta, g);
    return g;
}

Eigen::MatrixXd MomentModel::jac(TwoWayPanel::RecordView w,
                                 const Eigen::VectorXd& theta) const {
    if (jacobian) {
        Eigen::MatrixXd out(m, k);
        jacobian(w, theta, out);
        return out;
    }
    return numeric_moment_jacobian(*this, w, theta);
}

MomentModel linear_iv_model(const TwoWayPanel& panel, const std::string& y,
                            const std::vector<std::string>& x,
                            const std::vector<std::string>& z) {
    if (x.empty() || z.empty()) {
        throw Error(ErrorCode::UsageError, "linear IV model needs regressors and instruments");
    }
    if (z.size() < x.size()) {
        throw Error(ErrorCode::UsageError,
                    "under-identified model: fewer instruments than regressors");
    }
    MomentModel model;
    model.kind = MomentModel::Kind::LinearIV;
    model.m = static_cast<Eigen::Index>(z.size());
    model.k = static_cast<Eigen::Index>(x.size());
    model.y_index = panel.field_index(y);
    model.x_indices = field_indices(panel, x);
    model.z_indices = field_indices(panel, z);

    const auto y_idx = model.y_index;
    const auto x_idx = model.x_indices;
    const auto z_idx = model.z_indices;
    model.evaluate = [y_idx, x_idx, z_idx](TwoWayPanel::RecordView w,
                                           const Eigen::VectorXd& theta,
                                           Eigen::VectorXd& g) {
        double resid = w(static_cast<Eigen::Index>(y_idx));
        for (std::size_t l = 0; l < x_idx.size(); ++l) {
            resid -= w(static_cast<Eigen::Index>(x_idx[l])) * theta(static_cast<Eigen::Index>(l));
        }
        for (std::size_t r = 0; r < z_idx.size(); ++r) {
            g(static_cast<Eigen::Index>(r)) = w(static_cast<Eigen::Index>(z_idx[r])) * resid;
        }
    };
    model.jacobian = [x_idx, z_idx](TwoWayPanel::RecordView w, const Eigen::VectorXd&,
                                    Eigen::MatrixXd& jac) {
        for (std::size_t r = 0; r < z_idx.size(); ++r) {
            for (std::size_t l = 0; l < x_idx.size(); ++l) {
                jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) =
                    -w(static_cast<Eigen::Index>(z_idx[r])) *
                    w(static_cast<Eigen::Index>(x_idx[l]));
            }
        }
    };
    return model;
}

Eigen::MatrixXd numeric_moment_jacobian(const MomentModel& model,
                                        TwoWayPanel::RecordView w,
                                        const Eigen::VectorXd& theta) {
    Eigen::MatrixXd jac(model.m, model.k);
    Eigen::VectorXd lo(model.m), hi(model.m);
    Eigen::VectorXd shifted = theta;
    for (Eigen::Index l = 0; l < model.k; ++l) {
        const double h = fd_step(theta(l));
        shifted(l) = theta(l) + h;
        model.evaluate(w, shifted, hi);
        shifted(l) = theta(l) - h;
        model.evaluate(w, shifted, lo);
        shifted(l) = theta(l);
        jac.col(l) = (hi - lo) / (2.0 * h);
    }
    return jac;
}

double LossModel::loss_at(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const {
    return loss(w, theta);
}

Eigen::VectorXd LossModel::grad(TwoWayPanel::RecordView w,
                                const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g(k);
    gradient(w, theta, g);
    return g;
}

Eigen::MatrixXd LossModel::hess(TwoWayPanel::RecordView w,
                                const Eigen::VectorXd& theta) const {
    if (hessian) {
        Eigen::MatrixXd out(k, k);
        hessian(w, theta, out);
        return out;
    }
    return numeric_loss_hessian(*this, w, theta);
}

LossModel least_squares_model(const TwoWayPanel& panel, const std::string& y,
                              const std::vector<std::string>& x) {
    if (x.empty()) {
        throw Error(ErrorCode::UsageError, "least squares model needs regressors");
    }
    LossModel model;
    model.kind = LossModel::Kind::LeastSquares;
    model.k = static_cast<Eigen::Index>(x.size());
    model.y_index = panel.field_index(y);
    model.x_indices = field_indices(panel, x);

    const auto y_idx = model.y_index;
    const auto x_idx = model.x_indices;
    auto residual = [y_idx, x_idx](TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) {
        double r = w(static_cast<Eigen::Index>(y_idx));
        for (std::size_t l = 0; l < x_idx.size(); ++l) {
            r -= w(static_cast<Eigen::Index>(x_idx[l])) * theta(static_cast<Eigen::Index>(l));
        }
        return r;
    };
    model.loss = [residual](TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) {
        const double r = residual(w, theta);
        return 0.5 * r * r;
    };
    model.gradient = [residual, x_idx](TwoWayPanel::RecordView w,
                                       const Eigen::VectorXd& theta, Eigen::VectorXd& g) {
        const double r = residual(w, theta);
        for (std::size_t l = 0; l < x_idx.size(); ++l) {
            g(static_cast<Eigen::Index>(l)) = -w(static_cast<Eigen::Index>(x_idx[l])) * r;
        }
    };
    model.hessian = [x_idx](TwoWayPanel::RecordView w, const Eigen::VectorXd&,
                            Eigen::MatrixXd& h) {
        for (std::size_t a = 0; a < x_idx.size(); ++a) {
            for (std::size_t b = 0; b < x_idx.size(); ++b) {
                h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    w(static_cast<Eigen::Index>(x_idx[a])) *
                    w(static_cast<Eigen::Index>(x_idx[b]));
            }
        }
    };
    return model;
}

LossModel logistic_model(const TwoWayPanel& panel, const std::string& y,
                         const std::vector<std::string>& x) {
    if (x.empty()) {
        throw Error(ErrorCode::UsageError, "logistic model needs regressors");
    }
    LossModel model;
    model.kind = LossModel::Kind::Logistic;
    model.k = static_cast<Eigen::Index>(x.size());
    model.y_index = panel.field_index(y);
    model.x_indices = field_indices(panel, x);

    for (std::size_t c = 0; c < panel.n_obs(); ++c) {
        const double yv = panel.record(c)(static_cast<Eigen::Index>(model.y_index));
        if (yv != 0.0 && yv != 1.0) {
            throw Error(ErrorCode::UsageError,
                        "logistic outcome must be 0 or 1, found " + std::to_string(yv));
        }
    }

    const auto y_idx = model.y_index;
    const auto x_idx = model.x_indices;
    auto linear_index = [x_idx](TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) {
        double t = 0.0;
        for (std::size_t l = 0; l < x_idx.size(); ++l) {
            t += w(static_cast<Eigen::Index>(x_idx[l])) * theta(static_cast<Eigen::Index>(l));
        }
        return t;
    };
    model.loss = [y_idx, linear_index](TwoWayPanel::RecordView w,
                                       const Eigen::VectorXd& theta) {
        const double t = linear_index(w, theta);
        return softplus(t) - w(static_cast<Eigen::Index>(y_idx)) * t;
    };
    model.gradient = [y_idx, x_idx, linear_index](TwoWayPanel::RecordView w,
                                                  const Eigen::VectorXd& theta,
                                                  Eigen::VectorXd& g) {
        const double s = logistic(linear_index(w, theta)) -
                         w(static_cast<Eigen::Index>(y_idx));
        for (std::size_t l = 0; l < x_idx.size(); ++l) {
            g(static_cast<Eigen::Index>(l)) = w(static_cast<Eigen::Index>(x_idx[l])) * s;
        }
    };
    model.hessian = [x_idx, linear_index](TwoWayPanel::RecordView w,
                                          const Eigen::VectorXd& theta, Eigen::MatrixXd& h) {
        const double mu = logistic(linear_index(w, theta));
        const double wgt = mu * (1.0 - mu);
        for (std::size_t a = 0; a < x_idx.size(); ++a) {
            for (std::size_t b = 0; b < x_idx.size(); ++b) {
                h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    wgt * w(static_cast<Eigen::Index>(x_idx[a])) *
                    w(static_cast<Eigen::Index>(x_idx[b]));
            }
        }
    };
    return model;
}

Eigen::VectorXd numeric_loss_gradient(const LossModel& model, TwoWayPanel::RecordView w,
                                      const Eigen::VectorXd& theta) {
    Eigen::VectorXd g(model.k);
    Eigen::VectorXd shifted = theta;
    for (Eigen::Index l = 0; l < model.k; ++l) {
        const double h = fd_step(theta(l));
        shifted(l) = theta(l) + h;
        const double hi = model.loss(w, shifted);
        shifted(l) = theta(l) - h;
        const double lo = model.loss(w, shifted);
        shifted(l) = theta(l);
        g(l) = (hi - lo) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd numeric_loss_hessian(const LossModel& model, TwoWayPanel::RecordView w,
                                     const Eigen::VectorXd& theta) {
    Eigen::MatrixXd h(model.k, model.k);
    Eigen::VectorXd lo(model.k), hi(model.k);
    Eigen::VectorXd shifted = theta;
    for (Eigen::Index l = 0; l < model.k; ++l) {
        const double step = fd_step(theta(l));
        shifted(l) = theta(l) + step;
        model.gradient(w, shifted, hi);
        shifted(l) = theta(l) - step;
        model.gradient(w, shifted, lo);
        shifted(l) = theta(l);
        h.col(l) = (hi - lo) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace mwsub
