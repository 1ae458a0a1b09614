import org.junit.jupiter.api.Test;
import org.junit.jupiter.api.DisplayName;

class AnnotationsTest {
    @Test
    @DisplayName(value = "works")
    void works() {
        @SuppressWarnings("unused")
        int unusedLocal = 0;
    }

    @Override
    public String toString() {
        return Missing.NAME;
    }
}
