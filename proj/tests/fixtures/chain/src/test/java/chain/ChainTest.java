package chain;

import org.junit.jupiter.api.Test;

import static org.junit.jupiter.api.Assertions.assertEquals;

public class ChainTest {
    @Test
    public void m1AddsOne() {
        assertEquals(3, new Chain(2).m1());
    }
}
