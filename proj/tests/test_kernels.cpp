#include <doctest.h>

#include <omp.h>

#include "helpers.hpp"
#include "pbda/kernels.hpp"
#include "pbda/nn.hpp"

using namespace pbda;

TEST_CASE("parallel kernels agree bit-for-bit with the serial reference") {
    const Matrix X = testing::random_matrix(517, 5, 1), Y = testing::random_matrix(389, 5, 2, 0.7);
    const MlpArchitecture arch{{5, 9, 1}, Activation::tanh};
    const auto w = init_weights(arch, 3);

    std::vector<kernels::PairedIndex> blocks;
    for (std::size_t b = 0; b + 1 < 389; b += 2) blocks.push_back({b, b, b + 1, b + 1});

    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 7}) {
        CAPTURE(threads);
        omp_set_num_threads(threads);
        CHECK(kernels::parallel::predict_labels(arch, w, X) == kernels::serial::predict_labels(arch, w, X));
        CHECK(kernels::parallel::kernel_row_sums(X, Y, 1.3) == kernels::serial::kernel_row_sums(X, Y, 1.3));
        CHECK(kernels::parallel::kernel_sum(X, Y, 1.3) == kernels::serial::kernel_sum(X, Y, 1.3));
        CHECK(kernels::parallel::linear_mmd_terms(X, Y, blocks, 0.8) ==
              kernels::serial::linear_mmd_terms(X, Y, blocks, 0.8));
    }
    omp_set_num_threads(saved);
}

TEST_CASE("serial kernel sum matches a direct double loop") {
    const Matrix X = testing::random_matrix(40, 3, 5), Y = testing::random_matrix(30, 3, 6);
    double direct = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < 30; ++j) row += kernels::rbf(X.row(i), Y.row(j), 0.9);
        direct += row;
    }
    CHECK(kernels::serial::kernel_sum(X, Y, 0.9) == direct);
}
