#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "nodal/error.hpp"
#include "nodal/grid.hpp"

using namespace nodal;
constexpr double kPi = std::numbers::pi;

namespace {

// Strict-interior lattice points of a disk of radius R on a grid with nodes at multiples of h.
int brute_disk_count(double R, double h) {
    const int K = static_cast<int>(std::ceil(R / h)) + 1;
    int n = 0;
    for (int i = -K; i <= K; ++i)
        for (int j = -K; j <= K; ++j) {
            const double x = i * h, y = j * h;
            if (x * x + y * y < R * R) ++n;
        }
    return n;
}

double stencil_eig(int k, int l, double h) {
    const double a = std::sin(k * h / 2), b = std::sin(l * h / 2);
    return 4.0 / (h * h) * (a * a + b * b);
}

}  // namespace

TEST_CASE("square mesh counts strict interior points") {
    auto m = Mesh::build(Square{kPi}, kPi / 4);
    CHECK(m->size() == 9);
    auto r = Mesh::build(Rectangle{kPi, kPi / 2}, kPi / 8);
    CHECK(r->size() == 7 * 3);
}

TEST_CASE("disk mesh matches a brute-force lattice count") {
    for (double h : {0.5, 0.25, 0.1, 0.05}) {
        auto m = Mesh::build(Disk{1.0}, h);
        CHECK(static_cast<int>(m->size()) == brute_disk_count(1.0, h));
    }
    CHECK(Mesh::build(Disk{1.0}, 0.5)->size() == 9);
}

TEST_CASE("annulus excludes the hole") {
    auto m = Mesh::build(Annulus{0.5, 1.0}, 0.1);
    for (std::size_t k = 0; k < m->size(); ++k) {
        const Point p = m->coords(k);
        const double r2 = p.x * p.x + p.y * p.y;
        CHECK(r2 > 0.25);
        CHECK(r2 < 1.0);
    }
}

TEST_CASE("domain validation and degenerate meshes") {
    CHECK_THROWS_AS(Mesh::build(Square{-1.0}, 0.1), MeshError);
    CHECK_THROWS_AS(Mesh::build(Annulus{1.0, 0.5}, 0.1), MeshError);
    CHECK_THROWS_AS(Mesh::build(Dumbbell{1.0, 2.5, 1.0}, 0.1), MeshError);
    CHECK_THROWS_AS(Mesh::build(Square{1.0}, 2.0), MeshError);
    CHECK_THROWS_AS(Mesh::build(Square{1.0}, 0.0), MeshError);
}

TEST_CASE("dumbbell channel narrower than h is rejected") {
    CHECK_THROWS_WITH_AS(Mesh::build(Dumbbell{1.0, 0.1, 1.0}, 0.2),
                         doctest::Contains("channel width spans no interior row"), MeshError);
    auto m = Mesh::build(Dumbbell{1.0, 0.2, 1.0}, 0.04);
    CHECK(m->symmetric_under(Reflection::XAxis));
    CHECK(m->symmetric_under(Reflection::YAxis));
    // the channel midpoint is interior
    bool found = false;
    for (std::size_t k = 0; k < m->size(); ++k) {
        const Point p = m->coords(k);
        if (std::abs(p.x - m->center().x) < 1e-9 && std::abs(p.y - m->center().y) < 0.05) found = true;
    }
    CHECK(found);
}

TEST_CASE("every interior node has its neighbours inside the bounding grid") {
    for (const DomainSpec& d : {DomainSpec{Square{kPi}}, DomainSpec{Disk{1.0}}, DomainSpec{Annulus{0.3, 1.0}},
                                DomainSpec{Dumbbell{1.0, 0.2, 1.0}}}) {
        auto m = Mesh::build(d, 0.05);
        for (std::size_t k = 0; k < m->size(); ++k) {
            auto [i, j] = m->lattice(k);
            CHECK(i > 0);
            CHECK(j > 0);
            CHECK(i < m->nx() - 1);
            CHECK(j < m->ny() - 1);
            CHECK(m->index(i, j) == static_cast<int>(k));
        }
    }
}

TEST_CASE("one interior node gives A = [4/h^2]") {
    auto m = Mesh::build(Square{2.0}, 1.0);
    REQUIRE(m->size() == 1);
    auto a = neg_laplacian(*m);
    CHECK(a.at(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("laplacian is an exactly symmetric M-matrix") {
    auto m = Mesh::build(Disk{1.0}, 0.1);
    auto a = neg_laplacian(*m);
    CHECK(a.asymmetry() == 0.0);
    const double h = m->h();
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        double off = 0.0;
        for (std::size_t p = a.row_offsets()[i]; p < a.row_offsets()[i + 1]; ++p) {
            const std::size_t j = a.columns()[p];
            if (j == i) {
                CHECK(a.values()[p] == doctest::Approx(4 / (h * h)));
            } else {
                CHECK(a.values()[p] == doctest::Approx(-1 / (h * h)));
                off += -a.values()[p];
            }
        }
        CHECK(off <= 4 / (h * h) + 1e-9);
    }
}

TEST_CASE("matrix-free stencil agrees with the assembled operator") {
    auto m = Mesh::build(Annulus{0.4, 1.0}, 0.07);
    auto a = neg_laplacian(*m);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    Vector x(m->size());
    for (double& v : x) v = U(rng);
    Vector y1 = a.apply(x), y2(x.size());
    m->apply_laplacian(x, y2, 0.5);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(y2[k] == doctest::Approx(y1[k] + 0.5 * x[k]));
}

TEST_CASE("discrete square eigenvectors and quadrature") {
    const double h = kPi / 16;
    auto m = Mesh::build(Square{kPi}, h);
    auto phi = ScalarField::sample(m, [](Point p) { return std::sin(p.x) * std::sin(2 * p.y); });
    Vector ap(m->size());
    m->apply_laplacian(phi.values(), ap);
    for (std::size_t k = 0; k < ap.size(); ++k) CHECK(ap[k] == doctest::Approx(stencil_eig(1, 2, h) * phi[k]).epsilon(1e-10));
    auto psi = ScalarField::sample(m, [](Point p) { return std::sin(2 * p.x) * std::sin(p.y); });
    CHECK(std::abs(inner_l2(phi, psi)) < 1e-12);
    CHECK(inner_l2(phi, phi) > 0);
    CHECK(inner_l2(ScalarField::zeros(m), ScalarField::zeros(m)) == 0.0);
}

TEST_CASE("integral of one converges to the area at first order") {
    double prev_err = 0;
    for (double n : {16.0, 32.0, 64.0}) {
        auto m = Mesh::build(Square{kPi}, kPi / n);
        auto one = ScalarField::sample(m, [](Point) { return 1.0; });
        const double err = std::abs(integrate(one) - kPi * kPi);
        if (prev_err > 0) CHECK(prev_err / err == doctest::Approx(2.0).epsilon(0.1));
        prev_err = err;
    }
}

TEST_CASE("reflections are exact permutations") {
    auto m = Mesh::build(Square{kPi}, kPi / 16);
    auto phi = ScalarField::sample(m, [](Point p) { return std::sin(p.x) * std::sin(2 * p.y); });
    auto rx = reflect(phi, Reflection::XAxis);
    for (std::size_t k = 0; k < m->size(); ++k) CHECK(rx[k] == doctest::Approx(-phi[k]).epsilon(1e-12));
    auto ry = reflect(phi, Reflection::YAxis);
    for (std::size_t k = 0; k < m->size(); ++k) CHECK(ry[k] == doctest::Approx(phi[k]).epsilon(1e-12));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    Vector x(m->size());
    for (double& v : x) v = U(rng);
    ScalarField u(m, x);
    for (Reflection r : kAllReflections) {
        auto twice = reflect(reflect(u, r), r);
        for (std::size_t k = 0; k < m->size(); ++k) CHECK(twice[k] == u[k]);
        CHECK(norm_l2(reflect(u, r)) == doctest::Approx(norm_l2(u)));
        // commutes bitwise with the stencil
        Vector a1(x.size()), a2(x.size());
        m->apply_laplacian(reflect(u, r).values(), a1);
        m->apply_laplacian(u.values(), a2);
        auto ra2 = reflect(ScalarField(m, a2), r);
        for (std::size_t k = 0; k < x.size(); ++k) CHECK(a1[k] == ra2[k]);
    }
}

TEST_CASE("rectangle has no diagonal symmetry") {
    auto m = Mesh::build(Rectangle{kPi, kPi / 2}, kPi / 16);
    CHECK_FALSE(m->symmetric_under(Reflection::Diagonal));
    auto u = ScalarField::zeros(m);
    CHECK_THROWS_AS(reflect(u, Reflection::Diagonal), MeshMismatch);
}

TEST_CASE("mesh mismatch is detected") {
    auto a = Mesh::build(Square{kPi}, kPi / 8);
    auto b = Mesh::build(Square{kPi}, kPi / 8);
    CHECK_THROWS_AS(inner_l2(ScalarField::zeros(a), ScalarField::zeros(b)), MeshMismatch);
    CHECK_THROWS(ScalarField(a, Vector(3, 0.0)));
}

TEST_CASE("field dump round trip") {
    auto m = Mesh::build(Disk{1.0}, 0.2);
    auto u = ScalarField::sample(m, [](Point p) { return p.x - 0.3 * p.y; });
    std::stringstream ss;
    write_field(ss, u);
    std::string header;
    std::getline(ss, header);
    CHECK(header.rfind("# ", 0) == 0);
    ss.seekg(0);
    auto v = read_field(ss, m);
    for (std::size_t k = 0; k < m->size(); ++k) CHECK(v[k] == doctest::Approx(u[k]).epsilon(1e-11));
}

TEST_CASE("restriction and embedding by zero") {
    auto m = Mesh::build(Dumbbell{1.0, 0.2, 1.0}, 0.1);
    auto left = m->restrict_to([&](Point p) { return p.x < m->center().x - 0.5; });
    CHECK(left->size() < m->size());
    auto u = ScalarField::sample(left, [](Point) { return 1.0; });
    auto e = embed(u, m);
    CHECK(integrate(e) == doctest::Approx(integrate(u)));
}
