#include "ggbm/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <memory>
#include <mutex>

namespace ggbm::quad {

namespace {

void disable_gsl_abort() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

double trampoline(double x, void* p) {
    return (*static_cast<const Fn*>(p))(x);
}

struct Workspace {
    gsl_integration_workspace* w;
    explicit Workspace(size_t n) : w(gsl_integration_workspace_alloc(n)) {}
    ~Workspace() { gsl_integration_workspace_free(w); }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
};

constexpr size_t kLimit = 4000;

}  // namespace

Result integrate(const Fn& f, double a, double b, double abs_tol, double rel_tol) {
    disable_gsl_abort();
    Workspace ws(kLimit);
    gsl_function F{&trampoline, const_cast<Fn*>(&f)};
    Result r;
    r.status = gsl_integration_qag(&F, a, b, abs_tol, rel_tol, kLimit, GSL_INTEG_GAUSS61,
                                   ws.w, &r.value, &r.abs_error);
    if (r.status == GSL_EROUND && r.abs_error <= abs_tol) r.status = 0;
    return r;
}

Result integrate_singular(const Fn& f, double a, double b, double abs_tol, double rel_tol) {
    disable_gsl_abort();
    Workspace ws(kLimit);
    gsl_function F{&trampoline, const_cast<Fn*>(&f)};
    Result r;
    r.status = gsl_integration_qags(&F, a, b, abs_tol, rel_tol, kLimit, ws.w, &r.value,
                                    &r.abs_error);
    if (r.status == GSL_EROUND && r.abs_error <= abs_tol) r.status = 0;
    return r;
}

Result integrate_upper_infinite(const Fn& f, double a, double abs_tol, double rel_tol) {
    disable_gsl_abort();
    Workspace ws(kLimit);
    gsl_function F{&trampoline, const_cast<Fn*>(&f)};
    Result r;
    r.status = gsl_integration_qagiu(&F, a, abs_tol, rel_tol, kLimit, ws.w, &r.value,
                                     &r.abs_error);
    if (r.status == GSL_EROUND && r.abs_error <= abs_tol) r.status = 0;
    return r;
}

Result integrate_lower_infinite(const Fn& f, double b, double abs_tol, double rel_tol) {
    disable_gsl_abort();
    Workspace ws(kLimit);
    gsl_function F{&trampoline, const_cast<Fn*>(&f)};
    Result r;
    r.status = gsl_integration_qagil(&F, b, abs_tol, rel_tol, kLimit, ws.w, &r.value,
                                     &r.abs_error);
    if (r.status == GSL_EROUND && r.abs_error <= abs_tol) r.status = 0;
    return r;
}

}  // namespace ggbm::quad
