#include "peck/error.hpp"
#include "peck/readout.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <random>

using namespace peck;

namespace {

struct Blobs {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

Blobs make_blobs(std::size_t per_class, std::size_t classes, Eigen::Index dims, double spread,
                 std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    Blobs b;
    b.x.resize(static_cast<Eigen::Index>(per_class * classes), dims);
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t k = 0; k < per_class; ++k, ++r) {
            for (Eigen::Index d = 0; d < dims; ++d)
                b.x(r, d) = g(rng) + (d == static_cast<Eigen::Index>(c % static_cast<std::size_t>(dims)) ? 3.0 : 0.0);
            b.y.push_back(static_cast<int>(c));
        }
    return b;
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd xa(x.rows(), x.cols() + 1);
    xa << x, Eigen::VectorXd::Ones(x.rows());
    return xa;
}

} // namespace

TEST_CASE("softmax is shift invariant and sums to one")
{
    Eigen::VectorXd s(3);
    s << 1.0, 2.0, 3.0;
    const Eigen::VectorXd p = softmax(s);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p[2] / p[1] == doctest::Approx(std::exp(1.0)));
    const Eigen::VectorXd big = softmax((s.array() + 1000.0).matrix());
    CHECK((big - p).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("argmax ties go to the lowest index")
{
    Eigen::VectorXd v(4);
    v << 0.2, 0.5, 0.5, 0.1;
    CHECK(argmax(v) == 1);
    v.setConstant(0.25);
    CHECK(argmax(v) == 0);
}

TEST_CASE("cross-entropy gradient matches central differences")
{
    const Blobs b = make_blobs(6, 3, 4, 1.0, 9);
    const CrossEntropy ce(augment(b.x), b.y, 3, 0.05);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.3);
    Eigen::MatrixXd theta(5, 3);
    for (auto& v : theta.reshaped())
        v = g(rng);
    const Eigen::MatrixXd grad = ce.gradient(theta);
    const double h = 1e-6;
    for (Eigen::Index r = 0; r < theta.rows(); ++r)
        for (Eigen::Index c = 0; c < theta.cols(); ++c) {
            Eigen::MatrixXd tp = theta, tm = theta;
            tp(r, c) += h;
            tm(r, c) -= h;
            const double fd = (ce.value(tp) - ce.value(tm)) / (2 * h);
            CHECK(grad(r, c) == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("penalty leaves the bias row alone")
{
    const Blobs b = make_blobs(3, 2, 2, 1.0, 4);
    const CrossEntropy plain(augment(b.x), b.y, 2, 0.0), reg(augment(b.x), b.y, 2, 1.0);
    Eigen::MatrixXd theta = Eigen::MatrixXd::Ones(3, 2);
    const Eigen::MatrixXd d = reg.gradient(theta) - plain.gradient(theta);
    CHECK(d.topRows(2).isApprox(Eigen::MatrixXd::Ones(2, 2)));
    CHECK(d.row(2).isZero());
    CHECK(reg.value(theta) - plain.value(theta) == doctest::Approx(2.0));
}

TEST_CASE("zero parameters give the chance loss")
{
    const Blobs b = make_blobs(5, 4, 3, 1.0, 1);
    const CrossEntropy ce(augment(b.x), b.y, 4, 0.1);
    CHECK(ce.value(Eigen::MatrixXd::Zero(4, 4)) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("separable blobs are learned")
{
    const Blobs tr = make_blobs(30, 3, 3, 0.5, 11), te = make_blobs(20, 3, 3, 0.5, 12);
    TrainSpec spec;
    const SoftmaxModel m = train(tr.x, tr.y, spec);
    CHECK(m.classes == 3);
    CHECK(accuracy(predict(m, tr.x), tr.y) == 1.0);
    CHECK(accuracy(predict(m, te.x), te.y) >= 0.95);
    const Eigen::VectorXd p = predict_proba(m, te.x.row(0).transpose());
    CHECK(p.sum() == doctest::Approx(1.0));
}

TEST_CASE("training lowers the loss")
{
    const Blobs b = make_blobs(10, 3, 2, 1.5, 21);
    TrainSpec spec;
    spec.epochs = 50;
    const SoftmaxModel m = train(b.x, b.y, spec);
    const CrossEntropy ce(augment(m.standardization.apply(b.x)), b.y, 3, spec.l2_penalty);
    CHECK(ce.value(m.theta) < std::log(3.0));
}

TEST_CASE("kernelised and primal descent agree when features outnumber rows")
{
    const Blobs b = make_blobs(4, 3, 40, 1.0, 5);
    TrainSpec spec;
    spec.epochs = 200;
    const SoftmaxModel d = train(b.x, b.y, spec), p = train_primal(b.x, b.y, spec);
    CHECK((d.theta - p.theta).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(predict(d, b.x) == predict(p, b.x));
}

TEST_CASE("zero learning rate keeps theta at zero")
{
    const Blobs b = make_blobs(5, 3, 2, 1.0, 3);
    TrainSpec spec;
    spec.learning_rate = 0.0;
    const SoftmaxModel m = train(b.x, b.y, spec);
    CHECK(m.theta.isZero());
    CHECK(predict(m, b.x) == std::vector<int>(15, 0));
}

TEST_CASE("every class must appear in the training labels")
{
    const Blobs b = make_blobs(5, 2, 2, 1.0, 3);
    TrainSpec spec;
    CHECK(train(b.x, b.y, spec, 2).theta.cols() == 2);
    CHECK_THROWS(train(b.x, b.y, spec, 4));
    std::vector<int> bad = b.y;
    bad[0] = -1;
    CHECK_THROWS(train(b.x, bad, spec));
}

TEST_CASE("standardisation")
{
    Eigen::MatrixXd x(4, 2);
    x << 1, 5, 3, 5, 5, 5, 7, 5;
    const Standardization s = Standardization::fit(x);
    const Eigen::MatrixXd z = s.apply(x);
    CHECK(z.col(0).mean() == doctest::Approx(0.0));
    CHECK(z.col(0).squaredNorm() / 4 == doctest::Approx(1.0));
    CHECK(z.col(1).isZero());
    CHECK(Standardization::identity(2).apply(x) == x);
}

TEST_CASE("training rejects bad inputs")
{
    TrainSpec spec;
    spec.learning_rate = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = {};
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
    CHECK_THROWS(train(x, {0, 1}, spec));
}

TEST_CASE("model export lists every feature and the bias")
{
    const Blobs b = make_blobs(4, 2, 3, 1.0, 8);
    const SoftmaxModel m = train(b.x, b.y, TrainSpec{});
    const auto path = (std::filesystem::temp_directory_path() / "peck_model.csv").string();
    export_model_csv(m, path);
    std::ifstream is(path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line))
        lines.push_back(line);
    std::filesystem::remove(path);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "feature,class0,class1");
    CHECK(lines[4].rfind("bias,", 0) == 0);
}

TEST_CASE("scores are linear in x")
{
    SoftmaxModel m;
    m.classes = 3;
    m.theta = Eigen::MatrixXd::Zero(4, 3);
    m.standardization = Standardization::identity(3);
    const Eigen::VectorXd e1 = Eigen::Vector3d(1, 0, 0), x = Eigen::Vector3d(0.3, -1.0, 2.0),
                          y = Eigen::Vector3d(1.5, 0.2, -0.7);
    CHECK(scores(m, x).isZero());
    m.theta.col(0) << 1, 0, 0, 0;
    CHECK(scores(m, e1)[0] == 1.0);
    m.theta.topRows(3) << 1, 2, 3, -1, 0, 4, 0.5, 0.5, -2;
    CHECK((scores(m, Eigen::VectorXd(x + y)) - scores(m, x) - scores(m, y)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("probabilities from hand-picked scores")
{
    const Eigen::Vector3d eq = softmax(Eigen::Vector3d(0.7, 0.7, 0.7));
    CHECK(eq.isApprox(Eigen::Vector3d::Constant(1.0 / 3)));
    const Eigen::Vector3d p = softmax(Eigen::Vector3d(std::log(2.0), 0.0, 0.0));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.25));
    CHECK(argmax(Eigen::Vector3d(0.2, 0.5, 0.3)) == 1);
    CHECK(argmax(Eigen::Vector2d(0.5, 0.5)) == 0);
}

TEST_CASE("predictions survive a monotone transform of the scores")
{
    const Blobs b = make_blobs(10, 3, 2, 1.5, 33);
    const SoftmaxModel m = train(b.x, b.y, TrainSpec{});
    const Eigen::MatrixXd s = scores(m, b.x);
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const Eigen::VectorXd t = s.row(r).transpose().array().exp() * 3.0 + 1.0;
        CHECK(argmax(t) == predict(m, Eigen::VectorXd(b.x.row(r).transpose())));
    }
}

TEST_CASE("label-independent noise stays near chance")
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(300, 2);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 300; ++r) {
        x.row(r) << g(rng), g(rng);
        y.push_back(static_cast<int>(r % 3));
    }
    std::shuffle(y.begin(), y.end(), rng);
    const SoftmaxModel m = train(x, y, TrainSpec{});
    CHECK(std::abs(accuracy(predict(m, x), y) - 1.0 / 3) <= 0.1);
}

TEST_CASE("blob training reaches near-perfect accuracy")
{
    // 200 points in 2-D, centres 6 sigma apart.
    std::mt19937_64 rng(101);
    std::normal_distribution<double> g;
    const double cx[3] = {0.0, 6.0, 0.0}, cy[3] = {0.0, 0.0, 6.0};
    Eigen::MatrixXd x(200, 2);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 200; ++r) {
        const int c = static_cast<int>(r % 3);
        x.row(r) << cx[c] + g(rng), cy[c] + g(rng);
        y.push_back(c);
    }
    const SoftmaxModel m = train(x, y, TrainSpec{});
    CHECK(accuracy(predict(m, x), y) >= 0.99);
}
