"""Exception hierarchy shared by all frontlab modules."""


class FrontlabError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ExprSyntaxError(FrontlabError):
    def __init__(self, offset, expected, text=""):
        self.offset = offset
        self.expected = tuple(expected)
        self.text = text
        super().__init__(
            "syntax error at byte %d: expected %s" % (offset, " or ".join(self.expected))
        )


class UnknownIdentifier(FrontlabError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        super().__init__("unknown identifier %r" % name)


class DomainError(FrontlabError):
    def __init__(self, subexpression, point):
        self.subexpression = subexpression
        self.point = point
        super().__init__("%s is outside its real domain at %s" % (subexpression, point))


class SpecError(FrontlabError):
    pass


class FrontalViolation(FrontlabError):
    def __init__(self, point, which, magnitude):
        self.point = point
        self.which = which
        self.magnitude = magnitude
        super().__init__(
            "frontal invariant %r violated at %s (magnitude %.3g)" % (which, point, magnitude)
        )


class NonCompactDomain(FrontlabError):
    pass


class ResolutionError(FrontlabError):
    pass


class NewtonDivergence(FrontlabError):
    def __init__(self, point):
        self.point = point
        super().__init__("Newton corrector diverged near %s" % (point,))


class RankZero(FrontlabError):
    def __init__(self, point):
        self.point = point
        super().__init__("psi vanishes at %s (rank 0)" % (point,))


class NotA2(FrontlabError):
    pass


class OnSingularSet(FrontlabError):
    pass


class FrameInvalid(FrontlabError):
    pass


class NoLimit(FrontlabError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("initial vector does not converge: %s" % (diagnostics,))


class SnapFailure(FrontlabError):
    pass


class TangentAmbiguity(FrontlabError):
    pass


class TheoremAViolation(FrontlabError):
    exit_code = 2


class ErrorBudgetExceeded(FrontlabError):
    exit_code = 2

    def __init__(self, target, achieved):
        self.target = target
        self.achieved = achieved
        super().__init__("error budget %.3g exceeded (achieved %.3g)" % (target, achieved))


class EndpointDivergence(FrontlabError):
    pass


class GraphInconsistency(FrontlabError):
    pass


class HypothesisViolation(FrontlabError):
    exit_code = 3

    def __init__(self, points):
        self.points = list(points)
        super().__init__(
            "singular set does not admit at most peaks; offending points: %s" % (self.points,)
        )


class NotAdmissible(FrontlabError):
    pass


class ExpectationFailed(FrontlabError):
    exit_code = 2

    def __init__(self, name, predicate, observed):
        self.name = name
        self.predicate = predicate
        self.observed = observed
        super().__init__("%s: %s failed (observed %s)" % (name, predicate, observed))
