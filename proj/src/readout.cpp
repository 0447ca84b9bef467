#include "peck/readout.hpp"

#include "peck/error.hpp"
#include "peck/format.hpp"

#include <cmath>
#include <fstream>

namespace peck {

namespace {

std::size_t check_labels(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes)
{
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw std::invalid_argument("train: row count and label count differ");
    if (!x.allFinite())
        throw std::invalid_argument("train: non-finite features");
    int max_label = -1;
    for (int label : y) {
        if (label < 0)
            throw std::invalid_argument("train: negative label");
        max_label = std::max(max_label, label);
    }
    const std::size_t k = classes ? classes : static_cast<std::size_t>(max_label + 1);
    if (k < 2)
        throw std::invalid_argument("train: need at least two classes");
    if (static_cast<std::size_t>(max_label) >= k)
        throw std::invalid_argument("train: label outside [0, K)");
    std::vector<bool> seen(k, false);
    for (int label : y)
        seen[static_cast<std::size_t>(label)] = true;
    for (std::size_t c = 0; c < k; ++c)
        if (!seen[c])
            throw std::invalid_argument("train: class " + std::to_string(c) + " missing from y");
    return k;
}

Eigen::MatrixXd one_hot(const std::vector<int>& y, std::size_t classes)
{
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()),
                                              static_cast<Eigen::Index>(classes));
    for (std::size_t m = 0; m < y.size(); ++m)
        Y(static_cast<Eigen::Index>(m), y[m]) = 1.0;
    return Y;
}

// Row-wise max-shifted softmax, in place.
void softmax_rows(Eigen::MatrixXd& s)
{
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
    }
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& xs)
{
    Eigen::MatrixXd xa(xs.rows(), xs.cols() + 1);
    xa.leftCols(xs.cols()) = xs;
    xa.col(xs.cols()).setOnes();
    return xa;
}

} // namespace

Standardization Standardization::identity(Eigen::Index features)
{
    return {Eigen::RowVectorXd::Zero(features), Eigen::RowVectorXd::Ones(features)};
}

Standardization Standardization::fit(const Eigen::MatrixXd& x, double scale_floor)
{
    Standardization s;
    const auto m = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / m).cwiseSqrt().cwiseMax(scale_floor);
    return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const
{
    if (x.cols() != mean.size())
        throw std::invalid_argument("feature dimension does not match the model");
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

void TrainSpec::validate() const
{
    if (!(learning_rate >= 0.0))
        throw ConfigError("learning rate must be >= 0");
    if (epochs < 1)
        throw ConfigError("epochs must be >= 1");
    if (!(l2_penalty >= 0.0))
        throw ConfigError("l2 penalty must be >= 0");
}

Eigen::MatrixXd scores(const SoftmaxModel& model, const Eigen::MatrixXd& x)
{
    const Eigen::MatrixXd xs = model.standardization.apply(x);
    return (xs * model.theta.topRows(model.features())).rowwise()
           + model.theta.row(model.features());
}

Eigen::VectorXd scores(const SoftmaxModel& model, const Eigen::VectorXd& x)
{
    return scores(model, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& s)
{
    const Eigen::ArrayXd e = (s.array() - s.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

Eigen::VectorXd predict_proba(const SoftmaxModel& model, const Eigen::VectorXd& x)
{
    return softmax(scores(model, x));
}

int argmax(const Eigen::VectorXd& v)
{
    int best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
        if (v[k] > v[best])
            best = static_cast<int>(k);
    return best;
}

int predict(const SoftmaxModel& model, const Eigen::VectorXd& x)
{
    return argmax(predict_proba(model, x));
}

std::vector<int> predict(const SoftmaxModel& model, const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd p = scores(model, x);
    softmax_rows(p);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < p.rows(); ++r)
        out[static_cast<std::size_t>(r)] = argmax(p.row(r).transpose());
    return out;
}

CrossEntropy::CrossEntropy(Eigen::MatrixXd xa, const std::vector<int>& y, std::size_t classes,
                           double l2)
    : xa_{std::move(xa)}, onehot_{one_hot(y, classes)}, l2_{l2}
{
}

double CrossEntropy::value(const Eigen::MatrixXd& theta) const
{
    const Eigen::MatrixXd s = xa_ * theta;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        const double lse = mx + std::log((s.row(r).array() - mx).exp().sum());
        loss -= onehot_.row(r).dot(s.row(r)) - lse;
    }
    loss /= static_cast<double>(s.rows());
    const auto w = theta.topRows(theta.rows() - 1);
    return loss + 0.5 * l2_ * w.squaredNorm();
}

Eigen::MatrixXd CrossEntropy::gradient(const Eigen::MatrixXd& theta) const
{
    Eigen::MatrixXd p = xa_ * theta;
    softmax_rows(p);
    Eigen::MatrixXd g = xa_.transpose() * (p - onehot_) / static_cast<double>(xa_.rows());
    g.topRows(g.rows() - 1) += l2_ * theta.topRows(theta.rows() - 1);
    return g;
}

SoftmaxModel train_primal(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const TrainSpec& spec, std::size_t classes)
{
    spec.validate();
    const std::size_t k = check_labels(x, y, classes);
    SoftmaxModel model;
    model.classes = k;
    model.standardization = Standardization::fit(x);
    const CrossEntropy objective(augment(model.standardization.apply(x)), y, k, spec.l2_penalty);
    model.theta = Eigen::MatrixXd::Zero(x.cols() + 1, static_cast<Eigen::Index>(k));
    for (std::size_t e = 0; e < spec.epochs; ++e)
        model.theta -= spec.learning_rate * objective.gradient(model.theta);
    return model;
}

SoftmaxModel train(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainSpec& spec,
                   std::size_t classes)
{
    if (x.cols() <= x.rows())
        return train_primal(x, y, spec, classes);

    // theta_w stays in the row space of the standardised data, so with
    // theta_w = Xs^T A the iteration runs on the M x M Gram matrix.
    spec.validate();
    const std::size_t k = check_labels(x, y, classes);
    SoftmaxModel model;
    model.classes = k;
    model.standardization = Standardization::fit(x);
    const Eigen::MatrixXd xs = model.standardization.apply(x);
    const Eigen::MatrixXd gram = xs * xs.transpose();
    const Eigen::MatrixXd Y = one_hot(y, k);
    const auto M = x.rows();
    const auto K = static_cast<Eigen::Index>(k);
    const double inv_m = 1.0 / static_cast<double>(M);
    const double lr = spec.learning_rate;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, K);
    Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(K);
    Eigen::MatrixXd residual(M, K);
    for (std::size_t e = 0; e < spec.epochs; ++e) {
        residual.noalias() = gram * A;
        residual.rowwise() += bias;
        softmax_rows(residual);
        residual -= Y;
        bias -= (lr * inv_m) * residual.colwise().sum();
        A = (1.0 - lr * spec.l2_penalty) * A - (lr * inv_m) * residual;
    }
    model.theta.resize(x.cols() + 1, K);
    model.theta.topRows(x.cols()).noalias() = xs.transpose() * A;
    model.theta.row(x.cols()) = bias;
    return model;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual)
{
    if (predicted.size() != actual.size() || actual.empty())
        throw std::invalid_argument("accuracy: size mismatch or empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        hits += predicted[i] == actual[i];
    return static_cast<double>(hits) / static_cast<double>(actual.size());
}

void export_model_csv(const SoftmaxModel& model, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path + " for writing");
    os << "feature";
    for (std::size_t c = 0; c < model.classes; ++c)
        os << ",class" << c;
    os << '\n';
    std::string line;
    for (Eigen::Index r = 0; r < model.theta.rows(); ++r) {
        line = r < model.features() ? std::to_string(r) : std::string("bias");
        for (Eigen::Index c = 0; c < model.theta.cols(); ++c) {
            line += ',';
            append_number(line, model.theta(r, c));
        }
        os << line << '\n';
    }
    if (!os)
        throw IoError("write failed for " + path);
}

} // namespace peck
