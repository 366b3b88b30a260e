#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "kmsq/error.hpp"
#include "kmsq/models.hpp"
#include "kmsq/spectral.hpp"

using namespace kmsq;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TestVector cvec(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (auto x : xs) v[i++] = x;
  return TestVector(v);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Eigendecompose, Identity) {
  const auto m = eigendecompose(Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(m.spectrum()[0], 1.0);
  EXPECT_DOUBLE_EQ(m.spectrum()[1], 1.0);
  EXPECT_LT((m.eigenvectors().cwiseAbs() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Eigendecompose, Diagonal) {
  const auto m = eigendecompose(mat2(2, 0, 0, 5));
  EXPECT_NEAR(m.spectrum()[0], 2.0, 1e-15);
  EXPECT_NEAR(m.spectrum()[1], 5.0, 1e-15);
}

TEST(Eigendecompose, CharacteristicPolynomial) {
  // lambda^2 - 4 lambda + 3 = 0
  const auto m = eigendecompose(mat2(2, 1, 1, 2));
  EXPECT_NEAR(m.spectrum()[0], 1.0, 1e-14);
  EXPECT_NEAR(m.spectrum()[1], 3.0, 1e-14);
}

TEST(Eigendecompose, InvariantsOnRandomMatrix) {
  std::mt19937_64 gen(1);
  const Matrix h = random_generator(6, 0.2, 3.0, gen);
  const auto m = eigendecompose(h);
  const Matrix& q = m.eigenvectors();
  EXPECT_LT((q.transpose() * q - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((q * m.spectrum().asDiagonal() * q.transpose() - h).norm() / h.norm(), 1e-10);
  for (Index i = 1; i < 6; ++i) EXPECT_LE(m.spectrum()[i - 1], m.spectrum()[i]);
}

TEST(Eigendecompose, Rejections) {
  EXPECT_EQ(code_of([] { eigendecompose(mat2(1, 0.5, 0.4, 1)); }), ErrorCode::NonSymmetric);
  EXPECT_EQ(code_of([] { eigendecompose(mat2(1, 0, 0, 0)); }), ErrorCode::NonPositiveSpectrum);
  EXPECT_EQ(code_of([] { eigendecompose(mat2(1, 2, 2, 1)); }), ErrorCode::NonPositiveSpectrum);
}

TEST(ApplyFunction, IdentityMapGivesHf) {
  const Matrix h = mat2(2, 1, 1, 2);
  const auto m = eigendecompose(h);
  const TestVector f = cvec({Complex(1, 2), Complex(-0.5, 0.25)});
  const TestVector hf = apply_function(m, [](double l) { return Complex(l); }, f);
  EXPECT_LT((hf.components() - h.cast<Complex>() * f.components()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ApplyFunction, ConstantOneIsIdentity) {
  const auto m = eigendecompose(mat2(2, 1, 1, 2));
  const TestVector f = cvec({0.3, -1.7});
  const TestVector g = apply_function(m, [](double) { return Complex(1.0); }, f);
  EXPECT_LT((g.components() - f.components()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyFunction, ScalarExponential) {
  const auto m = eigendecompose(Matrix::Identity(1, 1));
  const TestVector r = apply_function(m, [](double l) { return Complex(std::exp(-l)); }, TestVector::real(Vector::Ones(1)));
  EXPECT_NEAR(r.components()[0].real(), 0.36787944117144233, 1e-15);
}

TEST(ApplyFunction, SingularAtSpectrum) {
  const auto m = eigendecompose(mat2(2, 1, 1, 2));
  const double pole = m.spectrum()[0];
  EXPECT_EQ(code_of([&] {
              apply_function(m, [&](double l) { return Complex(1.0 / (l - pole)); }, TestVector::real(Vector::Ones(2)));
            }),
            ErrorCode::FunctionSingularAtSpectrum);
}

TEST(ApplyFunction, Homomorphism) {
  std::mt19937_64 gen(2);
  const auto m = eigendecompose(random_generator(5, 0.1, 2.0, gen));
  auto phi = [](double l) { return Complex(std::exp(-0.7 * l)); };
  auto psi = [](double l) { return Complex(1.0 / (1.0 + l * l)); };
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    CVector c(5);
    for (auto& x : c) x = Complex(nd(gen), nd(gen));
    const TestVector f(c);
    const TestVector a = apply_function(m, [&](double l) { return phi(l) * psi(l); }, f);
    const TestVector b = apply_function(m, phi, apply_function(m, psi, f));
    EXPECT_LT((a.components() - b.components()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ApplyFunction, CommutesWithConjugation) {
  std::mt19937_64 gen(3);
  const auto m = eigendecompose(random_generator(4, 0.1, 2.0, gen));
  std::normal_distribution<double> nd;
  CVector c(4);
  for (auto& x : c) x = Complex(nd(gen), nd(gen));
  const TestVector f(c);
  auto phi = [](double l) { return Complex(std::cos(l) + l); };
  const TestVector a = conjugate(apply_function(m, phi, f));
  const TestVector b = apply_function(m, phi, conjugate(f));
  EXPECT_LT((a.components() - b.components()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InnerProduct, Examples) {
  const auto m = eigendecompose(Matrix::Identity(2, 2));
  EXPECT_EQ(inner(m, cvec({1, 0}), cvec({0, 1})), Complex(0.0));
  const Complex ip = inner(m, cvec({1, 0}), cvec({Complex(0, 1), 0}));
  EXPECT_DOUBLE_EQ(ip.real(), 0.0);
  EXPECT_DOUBLE_EQ(ip.imag(), 1.0);
  EXPECT_DOUBLE_EQ(symplectic(m, cvec({1, 0}), cvec({Complex(0, 1), 0})), 1.0);
  EXPECT_EQ(symplectic(m, cvec({0.3, -2.0}), cvec({0.3, -2.0})), 0.0);
}

TEST(InnerProduct, SymplecticAntisymmetricAndRealVanishing) {
  std::mt19937_64 gen(4);
  const auto m = eigendecompose(random_generator(4, 0.1, 2.0, gen));
  std::normal_distribution<double> nd;
  CVector a(4), b(4);
  for (auto& x : a) x = Complex(nd(gen), nd(gen));
  for (auto& x : b) x = Complex(nd(gen), nd(gen));
  EXPECT_NEAR(symplectic(m, TestVector(a), TestVector(b)), -symplectic(m, TestVector(b), TestVector(a)), 1e-14);
  EXPECT_EQ(symplectic(m, TestVector::real(a.real()), TestVector::real(b.real())), 0.0);
}

TEST(InnerProduct, DimensionMismatch) {
  const auto m = eigendecompose(Matrix::Identity(2, 2));
  EXPECT_EQ(code_of([&] { inner(m, cvec({1, 0}), cvec({1, 0, 0})); }), ErrorCode::DimensionMismatch);
}

TEST(Conjugate, Examples) {
  EXPECT_EQ(conjugate(cvec({Complex(0, 1)})).components()[0], Complex(0, -1));
  const TestVector r = cvec({1.5, -2});
  EXPECT_EQ(conjugate(r).components(), r.components());
  EXPECT_TRUE(r.is_real());
  const TestVector f = cvec({Complex(0.3, 0.7), Complex(-1, 2)});
  EXPECT_EQ(conjugate(conjugate(f)).components(), f.components());
  EXPECT_FALSE(f.is_real());
  EXPECT_TRUE(cvec({Complex(1, 1e-15)}).is_real());
  EXPECT_FALSE(cvec({Complex(1, 1e-13)}).is_real());
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto rule = gauss_legendre(6, 0.0, 2.0);
  // degree 11 is exact for 6 nodes
  double sum = 0.0;
  for (Index i = 0; i < 6; ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], 11);
  EXPECT_NEAR(sum, std::pow(2.0, 12) / 12.0, 1e-10);
  for (Index i = 1; i < 6; ++i) EXPECT_GT(rule.nodes[i], rule.nodes[i - 1]);
}

TEST(QuadratureModel, GaussianNormMatchesClosedForm) {
  for (int d : {1, 2, 3}) {
    const double a = 0.8;
    const auto model = GeneratorModel::from_dispersion(
        d, [](double p) { return p * p + 1.0; }, gauss_legendre(256, 0.0, gaussian_cutoff(2.0)));
    const TestVector f = gaussian_profile(model, 1.0, a);
    const double norm2 = inner(model, f, f).real();
    EXPECT_NEAR(norm2, std::pow(std::numbers::pi / (2.0 * a), 0.5 * d), 1e-12) << "d=" << d;
    EXPECT_EQ(model.dim(), 257);
  }
}

TEST(QuadratureModel, RejectsNonPositiveDispersion) {
  EXPECT_EQ(code_of([] {
              GeneratorModel::from_dispersion(3, [](double p) { return p - 1.0; }, gauss_legendre(16, 0.0, 4.0));
            }),
            ErrorCode::NonPositiveSpectrum);
}

TEST(MatrixIo, RoundTrip) {
  std::mt19937_64 gen(5);
  const Matrix h = random_generator(3, 0.5, 1.5, gen);
  std::stringstream s;
  write_matrix(s, h);
  const Matrix back = read_matrix(s);
  EXPECT_EQ((back - h).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MatrixIo, ShapeErrorsNameTheRow) {
  std::stringstream s("2\n1 0\n0\n");
  try {
    read_matrix(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MatrixParse);
    EXPECT_NE(std::string(e.what()).find("row"), std::string::npos);
  }
  std::stringstream bad("x\n");
  EXPECT_EQ(code_of([&] { read_matrix(bad); }), ErrorCode::MatrixParse);
}
