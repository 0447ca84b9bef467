#pragma once

// Softmax (multinomial logistic) readout trained by full-batch gradient
// descent on cross-entropy.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace peck {

struct Standardization {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardization identity(Eigen::Index features);
    static Standardization fit(const Eigen::MatrixXd& x, double scale_floor = 1e-9);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct SoftmaxModel {
    Eigen::MatrixXd theta; // (features + 1) x K, last row is the bias
    std::size_t classes = 0;
    Standardization standardization;

    Eigen::Index features() const { return theta.rows() - 1; }
};

struct TrainSpec {
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double l2_penalty = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// s_k = x~^T theta^(k), x~ standardised and bias-augmented.
Eigen::VectorXd scores(const SoftmaxModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd scores(const SoftmaxModel& model, const Eigen::MatrixXd& x);

/// Max-shifted softmax of a score vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& s);
Eigen::VectorXd predict_proba(const SoftmaxModel& model, const Eigen::VectorXd& x);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::VectorXd& v);
int predict(const SoftmaxModel& model, const Eigen::VectorXd& x);
std::vector<int> predict(const SoftmaxModel& model, const Eigen::MatrixXd& x);

/// Regularised cross-entropy J(theta) + l2 |theta_w|^2 / 2 over
/// bias-augmented rows `xa` (last column all ones).
class CrossEntropy {
public:
    CrossEntropy(Eigen::MatrixXd xa, const std::vector<int>& y, std::size_t classes, double l2);

    double value(const Eigen::MatrixXd& theta) const;
    Eigen::MatrixXd gradient(const Eigen::MatrixXd& theta) const;

private:
    Eigen::MatrixXd xa_;
    Eigen::MatrixXd onehot_;
    double l2_;
};

/// Full-batch gradient descent from theta = 0 with training-set
/// standardisation. `classes` = 0 infers K from the labels.
SoftmaxModel train(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainSpec& spec,
                   std::size_t classes = 0);

/// Same iterates as `train`, computed on the primal parameters. Kept for
/// cross-checking the kernelised path used when features outnumber rows.
SoftmaxModel train_primal(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const TrainSpec& spec, std::size_t classes = 0);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);

/// Flat CSV of theta: header `feature,class0,...`, one row per feature and a
/// final `bias` row.
void export_model_csv(const SoftmaxModel& model, const std::string& path);

} // namespace peck
