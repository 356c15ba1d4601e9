#include "rhythmlab/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "rhythmlab/error.hpp"

namespace rhythmlab::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return cpu_has_avx2();
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa pick_default() {
    if (const char* env = std::getenv("RHYTHMLAB_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        if (std::strcmp(env, "avx2") == 0 && isa_available(Isa::Avx2)) return Isa::Avx2;
        if (std::strcmp(env, "neon") == 0 && isa_available(Isa::Neon)) return Isa::Neon;
        // unrecognized or unavailable: fall through to auto
    }
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

struct Tables {
    Ops<float> f32;
    Ops<double> f64;
    Isa isa;
};

Tables make_tables(Isa isa) {
    Tables t;
    t.isa = isa;
    switch (isa) {
        case Isa::Scalar:
            t.f32 = detail::scalar_table<float>();
            t.f64 = detail::scalar_table<double>();
            break;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            t.f32 = detail::avx2_table<float>();
            t.f64 = detail::avx2_table<double>();
            break;
#else
            throw ConfigError("kernels: avx2 backend not compiled in");
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            t.f32 = detail::neon_table<float>();
            t.f64 = detail::neon_table<double>();
            break;
#else
            throw ConfigError("kernels: neon backend not compiled in");
#endif
    }
    return t;
}

Tables& active_tables() {
    static Tables tables = make_tables(pick_default());
    return tables;
}

} // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "?";
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out{Isa::Scalar};
    if (isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
    if (isa_available(Isa::Neon)) out.push_back(Isa::Neon);
    return out;
}

Isa active_isa() { return active_tables().isa; }

void force_isa(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError(std::string("kernels: backend unavailable: ") + isa_name(isa));
    }
    active_tables() = make_tables(isa);
}

template <>
const Ops<float>& ops<float>() {
    return active_tables().f32;
}

template <>
const Ops<double>& ops<double>() {
    return active_tables().f64;
}

namespace {
// Per-ISA tables cached for direct access (equivalence tests).
Tables& tables_for(Isa isa) {
    static Tables scalar = make_tables(Isa::Scalar);
    if (isa == Isa::Scalar) return scalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::Avx2) {
        static Tables avx2 = make_tables(Isa::Avx2);
        return avx2;
    }
#endif
#if defined(__aarch64__)
    if (isa == Isa::Neon) {
        static Tables neon = make_tables(Isa::Neon);
        return neon;
    }
#endif
    throw ConfigError(std::string("kernels: backend unavailable: ") + isa_name(isa));
}
} // namespace

template <>
const Ops<float>& ops_for<float>(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError(std::string("kernels: backend unavailable: ") + isa_name(isa));
    }
    return tables_for(isa).f32;
}

template <>
const Ops<double>& ops_for<double>(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError(std::string("kernels: backend unavailable: ") + isa_name(isa));
    }
    return tables_for(isa).f64;
}

} // namespace rhythmlab::kernels
