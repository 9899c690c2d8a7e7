#include "oracle_mpfr.hpp"

#include <mpfr.h>

namespace fdot_test {

namespace {
constexpr mpfr_prec_t kPrec = 256;
}

double erfcx_mp(double z) {
    mpfr_t x, e, r;
    mpfr_inits2(kPrec, x, e, r, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(x, z, MPFR_RNDN);
    mpfr_sqr(e, x, MPFR_RNDN);
    mpfr_exp(e, e, MPFR_RNDN);
    mpfr_erfc(r, x, MPFR_RNDN);
    mpfr_mul(r, r, e, MPFR_RNDN);
    const double out = mpfr_get_d(r, MPFR_RNDN);
    mpfr_clears(x, e, r, static_cast<mpfr_ptr>(nullptr));
    return out;
}

double boundary_k3_mp(double y3, double tau, double D, double beta) {
    // 2 exp(-y3^2/(4 D tau)) - 2 beta sqrt(pi D tau) exp(beta y3 + beta^2 D tau)
    //                           erfc((y3 + 2 beta D tau)/sqrt(4 D tau))
    mpfr_t my3, mtau, mD, mbeta, fourDt, t1, t2, z, pi, out;
    mpfr_inits2(kPrec, my3, mtau, mD, mbeta, fourDt, t1, t2, z, pi, out,
                static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(my3, y3, MPFR_RNDN);
    mpfr_set_d(mtau, tau, MPFR_RNDN);
    mpfr_set_d(mD, D, MPFR_RNDN);
    mpfr_set_d(mbeta, beta, MPFR_RNDN);
    mpfr_const_pi(pi, MPFR_RNDN);

    mpfr_mul(fourDt, mD, mtau, MPFR_RNDN);
    mpfr_mul_ui(fourDt, fourDt, 4, MPFR_RNDN);

    // t1 = 2 exp(-y3^2/fourDt)
    mpfr_sqr(t1, my3, MPFR_RNDN);
    mpfr_div(t1, t1, fourDt, MPFR_RNDN);
    mpfr_neg(t1, t1, MPFR_RNDN);
    mpfr_exp(t1, t1, MPFR_RNDN);
    mpfr_mul_ui(t1, t1, 2, MPFR_RNDN);

    // z = (y3 + 2 beta D tau)/sqrt(fourDt)
    mpfr_mul(z, mbeta, mD, MPFR_RNDN);
    mpfr_mul(z, z, mtau, MPFR_RNDN);
    mpfr_mul_ui(z, z, 2, MPFR_RNDN);
    mpfr_add(z, z, my3, MPFR_RNDN);
    mpfr_sqrt(t2, fourDt, MPFR_RNDN);
    mpfr_div(z, z, t2, MPFR_RNDN);

    // t2 = 2 beta sqrt(pi D tau) exp(beta y3 + beta^2 D tau) erfc(z)
    mpfr_mul(t2, mD, mtau, MPFR_RNDN);
    mpfr_mul(t2, t2, pi, MPFR_RNDN);
    mpfr_sqrt(t2, t2, MPFR_RNDN);
    mpfr_mul(t2, t2, mbeta, MPFR_RNDN);
    mpfr_mul_ui(t2, t2, 2, MPFR_RNDN);
    mpfr_t expo;
    mpfr_init2(expo, kPrec);
    mpfr_sqr(expo, mbeta, MPFR_RNDN);
    mpfr_mul(expo, expo, mD, MPFR_RNDN);
    mpfr_mul(expo, expo, mtau, MPFR_RNDN);
    mpfr_fma(expo, mbeta, my3, expo, MPFR_RNDN);
    mpfr_exp(expo, expo, MPFR_RNDN);
    mpfr_mul(t2, t2, expo, MPFR_RNDN);
    mpfr_erfc(z, z, MPFR_RNDN);
    mpfr_mul(t2, t2, z, MPFR_RNDN);

    mpfr_sub(out, t1, t2, MPFR_RNDN);
    const double result = mpfr_get_d(out, MPFR_RNDN);
    mpfr_clears(my3, mtau, mD, mbeta, fourDt, t1, t2, z, pi, out, expo,
                static_cast<mpfr_ptr>(nullptr));
    return result;
}

}  // namespace fdot_test
