from rest_framework import serializers


class CommaListField(serializers.ListField):
    """List field that also accepts the comma-separated form used in config files."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(",") if item.strip()]
        return super().to_internal_value(data)


class LevelCountsField(serializers.Field):
    """``level:count`` pairs, e.g. ``2:1, 1:1``, as {level: count}."""

    default_error_messages = {
        "invalid": "Expected level:count pairs separated by commas.",
    }

    def to_internal_value(self, data):
        if isinstance(data, dict):
            pairs = list(data.items())
        else:
            pairs = []
            for item in str(data).split(","):
                if not item.strip():
                    continue
                if ":" not in item:
                    self.fail("invalid")
                pairs.append(item.split(":", 1))
        try:
            counts = {int(level): int(count) for level, count in pairs}
        except (TypeError, ValueError):
            self.fail("invalid")
        if any(count < 0 for count in counts.values()):
            raise serializers.ValidationError("Counts must be nonnegative.")
        return {level: count for level, count in counts.items() if count}

    def to_representation(self, value):
        return {str(level): count for level, count in sorted(value.items())}


class SectionSerializer(serializers.Serializer):
    """Base for config sections: keys that are not declared fields are errors."""

    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: "Unknown key." for key in unknown})
        return super().to_internal_value(data)


class MeasureSectionSerializer(SectionSerializer):
    """Serializer for the [measure] section."""

    WEIGHTS = ("uniform", "geometric", "krawtchouk", "exp_polynomial")

    theta = serializers.FloatField(default=1.0, min_value=1e-6)
    N = serializers.IntegerField(default=2, min_value=1, max_value=8)
    k = serializers.IntegerField(default=1, min_value=1)
    M = serializers.IntegerField(default=2, min_value=0)
    weight = serializers.ChoiceField(choices=WEIGHTS, default="uniform")
    q = serializers.FloatField(
        default=0.5,
        help_text="Base of the Krawtchouk-type top weight"
    )
    qs = CommaListField(
        child=serializers.FloatField(),
        required=False,
        help_text="Per-level geometric bases q_k, ..., q_N"
    )
    coefficients = CommaListField(
        child=serializers.FloatField(),
        required=False,
        help_text="c₀, c₁, ... of the exp-polynomial top weight"
    )

    def validate(self, attrs):
        if attrs["k"] > attrs["N"]:
            raise serializers.ValidationError({"k": "Must not exceed N."})
        if attrs["weight"] == "geometric":
            levels = attrs["N"] - attrs["k"] + 1
            if len(attrs.get("qs", ())) != levels:
                raise serializers.ValidationError({"qs": f"Geometric weights need {levels} bases."})
            if any(q == 0 for q in attrs["qs"]):
                raise serializers.ValidationError({"qs": "Bases must be nonzero."})
        if attrs["weight"] == "krawtchouk" and attrs["q"] <= 0:
            raise serializers.ValidationError({"q": "Must be positive."})
        if attrs["weight"] == "exp_polynomial" and not attrs.get("coefficients"):
            raise serializers.ValidationError({"coefficients": "Required for exp_polynomial weights."})
        return attrs


class FamilySectionSerializer(SectionSerializer):
    """Serializer for the [family] section."""

    kind = serializers.ChoiceField(
        choices=("krawtchouk", "geometric"),
        required=False,
        help_text="Defaults to the family matching the measure weight"
    )
    corrupt = serializers.FloatField(
        default=1.0,
        help_text="Factor applied to the level-k φ₁; 1 leaves the family intact"
    )
    which = serializers.ChoiceField(choices=("R1", "R2", "both"), default="both")
    variant = serializers.ChoiceField(choices=("b1", "b2", "both"), default="both")
    branch = serializers.ChoiceField(choices=("general", "one"), required=False)

    def validate_corrupt(self, value):
        if value == 0:
            raise serializers.ValidationError("Must be nonzero.")
        return value


class ContourSectionSerializer(SectionSerializer):
    """Serializer for the [contour] section."""

    nodes = serializers.IntegerField(
        required=False,
        min_value=8,
        help_text="Fixed trapezoid node count; adaptive when omitted"
    )
    quadrature_tol = serializers.FloatField(required=False, min_value=0.0)
    max_nodes = serializers.IntegerField(required=False, min_value=8)


class ObservablesSectionSerializer(SectionSerializer):
    """Serializer for the [observables] section."""

    L = serializers.FloatField(default=1.0, min_value=1e-9)
    counts = LevelCountsField(
        required=False,
        help_text="Observation points per level"
    )


class ContinuousSectionSerializer(SectionSerializer):
    """Serializer for the [continuous] section."""

    theta = serializers.FloatField(default=0.7, min_value=1e-6)
    N = serializers.IntegerField(default=2, min_value=1, max_value=12)
    k = serializers.IntegerField(default=1, min_value=1)
    a_minus = serializers.FloatField(default=-2.0)
    a_plus = serializers.FloatField(default=2.0)
    potential = CommaListField(
        child=serializers.FloatField(),
        default=[0.0, 0.0, 0.5],
        help_text="Coefficients of V in increasing degree"
    )

    def validate(self, attrs):
        if attrs["k"] > attrs["N"]:
            raise serializers.ValidationError({"k": "Must not exceed N."})
        if attrs["a_minus"] >= attrs["a_plus"]:
            raise serializers.ValidationError({"a_plus": "Must exceed a_minus."})
        return attrs


class JackSectionSerializer(SectionSerializer):
    """Serializer for the [jack] section."""

    N = serializers.IntegerField(default=3, min_value=1, max_value=6)
    max_part = serializers.IntegerField(default=3, min_value=0)
    thetas = CommaListField(
        child=serializers.FloatField(min_value=1e-6),
        default=[0.5, 1.0, 1.3, 2.0],
    )
    cauchy_N = CommaListField(
        child=serializers.IntegerField(min_value=1, max_value=4),
        default=[1, 2],
    )
    cauchy_q = CommaListField(
        child=serializers.FloatField(min_value=0.0),
        default=[0.1, 0.2],
    )
    truncation = serializers.IntegerField(default=40, min_value=1)

    def validate_cauchy_q(self, value):
        if any(q >= 1 for q in value):
            raise serializers.ValidationError("Every q must lie in [0, 1).")
        return value


class SamplingSectionSerializer(SectionSerializer):
    """Serializer for the [sampling] section; unset keys take per-command defaults."""

    samples = serializers.IntegerField(required=False, min_value=1)
    burn_in = serializers.IntegerField(required=False, min_value=0)
    chains = serializers.IntegerField(required=False, min_value=1)
    thin = serializers.IntegerField(default=1, min_value=1)
    step = serializers.FloatField(required=False, min_value=1e-12)
    grid_points = serializers.IntegerField(required=False, min_value=16)
    batches = serializers.IntegerField(required=False, min_value=20)
    sigmas = serializers.FloatField(required=False, min_value=0.0)
    doubling = serializers.BooleanField(default=False)
    probes = serializers.IntegerField(default=10, min_value=0)
    batch = serializers.CharField(
        required=False,
        help_text="Existing sample batch to analyse instead of sampling"
    )
    L_values = CommaListField(
        child=serializers.IntegerField(min_value=1),
        required=False,
    )
    exact_limit = serializers.IntegerField(required=False, min_value=0)
    discrete_samples = serializers.IntegerField(required=False, min_value=1)
    continuous_samples = serializers.IntegerField(required=False, min_value=1)
    reference = serializers.ChoiceField(choices=("auto", "quadrature", "mc"), required=False)


class RunSectionSerializer(SectionSerializer):
    """Serializer for the [run] section; command-line flags override it."""

    seed = serializers.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)
    tol = serializers.FloatField(required=False, min_value=0.0)
    threads = serializers.IntegerField(required=False, min_value=1)
    out = serializers.CharField(required=False)
    format = serializers.ChoiceField(choices=("json", "csv"), default="json")


SECTION_SERIALIZERS = {
    "measure": MeasureSectionSerializer,
    "family": FamilySectionSerializer,
    "contour": ContourSectionSerializer,
    "observables": ObservablesSectionSerializer,
    "continuous": ContinuousSectionSerializer,
    "jack": JackSectionSerializer,
    "sampling": SamplingSectionSerializer,
    "run": RunSectionSerializer,
}
