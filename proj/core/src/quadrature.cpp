#include "warpsmooth/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>

#include "warpsmooth/errors.hpp"

namespace warpsmooth::quad {

namespace {

struct GslQuiet {
  GslQuiet() { gsl_set_error_handler_off(); }
};

double trampoline(double x, void* params) {
  return (*static_cast<const std::function<double(double)>*>(params))(x);
}

using Workspace =
    std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)>;

Workspace make_workspace(size_t n) {
  return Workspace(gsl_integration_workspace_alloc(n), gsl_integration_workspace_free);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol) {
  static GslQuiet quiet;
  if (a == b) return 0.0;
  gsl_function gf{&trampoline, const_cast<std::function<double(double)>*>(&f)};
  auto ws = make_workspace(2048);
  double result = 0.0, abserr = 0.0;
  int status = gsl_integration_qag(&gf, a, b, abs_tol, rel_tol, 2048,
                                   GSL_INTEG_GAUSS31, ws.get(), &result, &abserr);
  if (status != GSL_SUCCESS && status != GSL_EROUND)
    throw NotConverged("quadrature: QAG failed with status " + std::to_string(status));
  return result;
}

double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol, double rel_tol) {
  static GslQuiet quiet;
  gsl_function gf{&trampoline, const_cast<std::function<double(double)>*>(&f)};
  auto ws = make_workspace(2048);
  double result = 0.0, abserr = 0.0;
  int status = gsl_integration_qagiu(&gf, a, abs_tol, rel_tol, 2048, ws.get(),
                                     &result, &abserr);
  if (status != GSL_SUCCESS && status != GSL_EROUND)
    throw NotConverged("quadrature: QAGIU failed with status " + std::to_string(status));
  return result;
}

}  // namespace warpsmooth::quad
