#pragma once

// Complex arithmetic on the tape, expressed over real (re, im) pairs.

#include "risnoma/autodiff.hpp"

namespace risnoma::grad {

struct ComplexVar {
    Var re;
    Var im;
};

// Elementwise product.
ComplexVar cmul(const ComplexVar& a, const ComplexVar& b);

// Matrix product a (r×k) * b (k×c).
ComplexVar cmatmul(const ComplexVar& a, const ComplexVar& b);

// e^{j f} elementwise.
ComplexVar expj(const Var& phases);

// sum |z|^2 over all entries, 1×1.
Var squared_norm(const ComplexVar& z);

// sum conj(a) .* b over all entries, as a (re, im) pair of 1×1 nodes.
ComplexVar inner(const ComplexVar& a, const ComplexVar& b);

} // namespace risnoma::grad
