package org.redisson;

import java.util.UUID;

public final class ServiceManager {

    private static final ServiceManager INSTANCE = new ServiceManager();

    public static ServiceManager instance() {
        return INSTANCE;
    }

    public String generateId() {
        return UUID.randomUUID().toString();
    }
}
