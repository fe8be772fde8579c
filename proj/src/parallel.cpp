#include "parcelqc/parallel.hpp"

#include <cstdlib>

namespace parcelqc {

int default_thread_count() {
    if (const char* env = std::getenv("PARCELQC_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace parcelqc
