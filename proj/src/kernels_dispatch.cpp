#include "covtest/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace covtest::kernels {

const Ops* avx2_ops() {
#if defined(COVTEST_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return detail::avx2_table();
    }
#endif
    return nullptr;
}

const Ops& active() {
    static const Ops& selected = []() -> const Ops& {
        if (const char* env = std::getenv("COVTEST_KERNELS")) {
            const std::string_view v(env);
            if (v == "scalar") return scalar_ops();
            if (v == "avx2") {
                if (const Ops* o = avx2_ops()) return *o;
                return scalar_ops();  // requested but unavailable
            }
        }
        if (const Ops* o = avx2_ops()) return *o;
        return scalar_ops();
    }();
    return selected;
}

}  // namespace covtest::kernels
