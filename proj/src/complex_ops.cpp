#include "risnoma/complex_ops.hpp"

namespace risnoma::grad {

ComplexVar cmul(const ComplexVar& a, const ComplexVar& b) {
    return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

ComplexVar cmatmul(const ComplexVar& a, const ComplexVar& b) {
    return {sub(matmul(a.re, b.re), matmul(a.im, b.im)),
            add(matmul(a.re, b.im), matmul(a.im, b.re))};
}

ComplexVar expj(const Var& phases) { return {cos(phases), sin(phases)}; }

Var squared_norm(const ComplexVar& z) { return add(sum_all(square(z.re)), sum_all(square(z.im))); }

ComplexVar inner(const ComplexVar& a, const ComplexVar& b) {
    // conj(a) b = (ar - j ai)(br + j bi) = (ar br + ai bi) + j (ar bi - ai br)
    Var re = add(sum_all(mul(a.re, b.re)), sum_all(mul(a.im, b.im)));
    Var im = sub(sum_all(mul(a.re, b.im)), sum_all(mul(a.im, b.re)));
    return {re, im};
}

} // namespace risnoma::grad
