#ifndef HORIZON_STUDENT_T_HPP
#define HORIZON_STUDENT_T_HPP

namespace horizon {

// Regularized incomplete beta I_x(a, b), evaluated with the Lentz
// continued fraction; absolute error below 1e-12 on the tested domain.
double regularized_incomplete_beta(double x, double a, double b);

// P(T <= x) for a Student-t variable with dof degrees of freedom.
double student_t_cdf(double x, double dof);

// Two-sided p-value of an observed statistic t.
double student_t_two_sided_p(double t, double dof);

}  // namespace horizon

#endif  // HORIZON_STUDENT_T_HPP
