#include "waffle/kernels/kernels.hpp"

namespace waffle::kernels {

const Backend& scalar_backend() {
    static const Backend b = {
        "scalar",
        &ref::gemm_nn<float>,
        &ref::gemm_nt<float>,
        &ref::gemm_tn<float>,
        &ref::axpy<float>,
        &ref::scal<float>,
        &ref::scale_copy<float>,
        &ref::vadd<float>,
        &ref::relu_fwd<float>,
        &ref::relu_bwd<float>,
        &ref::sgd_update<float>,
        &ref::bias_add<float>,
        &ref::row_sum<float>,
    };
    return b;
}

}  // namespace waffle::kernels
